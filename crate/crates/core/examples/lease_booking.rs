//! Bookings and leases in simulated time: grant, contention, expiry, reset.
//!
//!     cargo run --example lease_booking

use chrono::{Duration, TimeZone, Utc};
use gymgate::gateway::{Booking, BookingBook, LeaseTable};

fn main() {
    let t = |min: i64| Utc.with_ymd_and_hms(2026, 6, 1, 10, 0, 0).unwrap() + Duration::minutes(min);
    let env = "OffWorldMonolithDiscreteSim-v0";
    let mut book = BookingBook::default();
    book.insert(Booking {
        booking_id: 1,
        user_id: "ada".into(),
        env_id: env.into(),
        start: t(0),
        end: t(60),
    })
    .unwrap();
    println!(
        "overlapping booking for bo: {:?}",
        book.check(&Booking {
            booking_id: 2,
            user_id: "bo".into(),
            env_id: env.into(),
            start: t(30),
            end: t(90),
        })
    );

    let mut leases = LeaseTable::new(Duration::seconds(60));
    let lease = leases.acquire(&book, "ada", "s-1", env, t(1)).unwrap();
    println!(
        "ada/s-1 granted lease {} until {}",
        lease.lease_id,
        lease.expires_at()
    );
    println!(
        "ada/s-2 while held: {:?}",
        leases.acquire(&book, "ada", "s-2", env, t(1)).unwrap_err()
    );
    println!(
        "ada at 11:05: {:?}",
        leases.acquire(&book, "ada", "s-2", env, t(65)).unwrap_err()
    );

    // s-1 goes silent; the sweeper expires it and the env resets.
    let expired = leases.expire(t(3));
    println!(
        "expired at 10:03: {:?}",
        expired.iter().map(|l| l.lease_id).collect::<Vec<_>>()
    );
    println!(
        "during reset: {:?}",
        leases.acquire(&book, "ada", "s-2", env, t(3)).unwrap_err()
    );
    leases.finish_reset(env);
    let again = leases.acquire(&book, "ada", "s-2", env, t(3)).unwrap();
    println!(
        "after reset: lease {} for {}",
        again.lease_id, again.session_id
    );
}
