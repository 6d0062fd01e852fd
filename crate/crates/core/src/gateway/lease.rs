//! Exclusive environment leases.
//!
//! A lease is live while `now` is before both its heartbeat deadline and the
//! end of the booking it was granted under. Expired leases are not handed out
//! again directly: [`LeaseTable::expire`] moves their environment into a
//! resetting state, and it only becomes grantable after
//! [`LeaseTable::finish_reset`].

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, Utc};
use serde::Serialize;

use super::booking::BookingBook;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lease {
    pub lease_id: u64,
    pub user_id: String,
    pub session_id: String,
    pub env_id: String,
    pub acquired_at: DateTime<Utc>,
    pub heartbeat_deadline: DateTime<Utc>,
    pub booking_id: u64,
    pub booking_end: DateTime<Utc>,
}

impl Lease {
    pub fn expires_at(&self) -> DateTime<Utc> {
        self.heartbeat_deadline.min(self.booking_end)
    }

    pub fn is_live(&self, now: DateTime<Utc>) -> bool {
        now < self.expires_at()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LeaseError {
    #[error("environment is leased by another session")]
    Busy,
    #[error("no booking covers this environment now")]
    NoBooking,
    #[error("lease expired or was released")]
    Lost,
}

#[derive(Debug, Clone)]
pub struct LeaseTable {
    ttl: Duration,
    next_id: u64,
    by_env: BTreeMap<String, Lease>,
    resetting: BTreeSet<String>,
}

impl LeaseTable {
    pub fn new(ttl: Duration) -> Self {
        Self {
            ttl,
            next_id: 1,
            by_env: BTreeMap::new(),
            resetting: BTreeSet::new(),
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn acquire(
        &mut self,
        bookings: &BookingBook,
        user_id: &str,
        session_id: &str,
        env_id: &str,
        now: DateTime<Utc>,
    ) -> Result<Lease, LeaseError> {
        let booking = bookings
            .covering(user_id, env_id, now)
            .ok_or(LeaseError::NoBooking)?;
        if self.by_env.contains_key(env_id) || self.resetting.contains(env_id) {
            return Err(LeaseError::Busy);
        }
        let lease = Lease {
            lease_id: self.next_id,
            user_id: user_id.to_owned(),
            session_id: session_id.to_owned(),
            env_id: env_id.to_owned(),
            acquired_at: now,
            heartbeat_deadline: now + self.ttl,
            booking_id: booking.booking_id,
            booking_end: booking.end,
        };
        self.next_id += 1;
        self.by_env.insert(env_id.to_owned(), lease.clone());
        Ok(lease)
    }

    fn find_mut(&mut self, lease_id: u64) -> Option<&mut Lease> {
        self.by_env.values_mut().find(|l| l.lease_id == lease_id)
    }

    /// Records activity on a live lease, pushing its deadline to `now + ttl`.
    pub fn touch(&mut self, lease_id: u64, now: DateTime<Utc>) -> Result<Lease, LeaseError> {
        let ttl = self.ttl;
        match self.find_mut(lease_id) {
            Some(lease) if lease.is_live(now) => {
                lease.heartbeat_deadline = lease.heartbeat_deadline.max(now + ttl);
                Ok(lease.clone())
            }
            _ => Err(LeaseError::Lost),
        }
    }

    /// Touches every live lease held by `session_id`.
    pub fn touch_session(&mut self, session_id: &str, now: DateTime<Utc>) {
        let ttl = self.ttl;
        for lease in self.by_env.values_mut() {
            if lease.session_id == session_id && lease.is_live(now) {
                lease.heartbeat_deadline = lease.heartbeat_deadline.max(now + ttl);
            }
        }
    }

    /// Voluntary release. The caller has already reset the environment.
    pub fn release(&mut self, lease_id: u64) -> Option<Lease> {
        let env = self
            .by_env
            .iter()
            .find(|(_, l)| l.lease_id == lease_id)
            .map(|(e, _)| e.clone())?;
        self.by_env.remove(&env)
    }

    /// Removes every lease that is no longer live and marks its environment
    /// as resetting.
    pub fn expire(&mut self, now: DateTime<Utc>) -> Vec<Lease> {
        let stale: Vec<String> = self
            .by_env
            .iter()
            .filter(|(_, l)| !l.is_live(now))
            .map(|(e, _)| e.clone())
            .collect();
        stale
            .into_iter()
            .map(|env| {
                self.resetting.insert(env.clone());
                self.by_env.remove(&env).expect("listed above")
            })
            .collect()
    }

    pub fn finish_reset(&mut self, env_id: &str) -> bool {
        self.resetting.remove(env_id)
    }

    pub fn is_resetting(&self, env_id: &str) -> bool {
        self.resetting.contains(env_id)
    }

    pub fn holder(&self, env_id: &str) -> Option<&Lease> {
        self.by_env.get(env_id)
    }

    pub fn get(&self, lease_id: u64) -> Option<&Lease> {
        self.by_env.values().find(|l| l.lease_id == lease_id)
    }

    pub fn leases(&self) -> impl Iterator<Item = &Lease> {
        self.by_env.values()
    }
}
