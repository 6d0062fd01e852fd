//! Time bookings: per-environment, non-overlapping wall-clock intervals.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Booking {
    pub booking_id: u64,
    pub user_id: String,
    pub env_id: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Booking {
    /// Half-open: `start <= t < end`.
    pub fn covers(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }

    pub fn overlaps(&self, other: &Booking) -> bool {
        self.env_id == other.env_id && self.start < other.end && other.start < self.end
    }
}

/// Parses an RFC 3339 timestamp, `now`, or `now+<n><s|m|h|d>` (also `-`).
pub fn parse_when(text: &str, now: DateTime<Utc>) -> Result<DateTime<Utc>, String> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix("now") {
        if rest.is_empty() {
            return Ok(now);
        }
        let (sign, rest) = if let Some(r) = rest.strip_prefix('+') {
            (1, r)
        } else if let Some(r) = rest.strip_prefix('-') {
            (-1, r)
        } else {
            return Err(format!("cannot parse time '{text}'"));
        };
        let split = rest.char_indices().last().map_or(0, |(i, _)| i);
        let (digits, unit) = rest.split_at(split);
        let n: i64 = digits
            .parse()
            .map_err(|_| format!("cannot parse offset in '{text}'"))?;
        let offset = match unit {
            "s" => chrono::Duration::seconds(n),
            "m" => chrono::Duration::minutes(n),
            "h" => chrono::Duration::hours(n),
            "d" => chrono::Duration::days(n),
            _ => return Err(format!("unknown unit in '{text}'; use s, m, h or d")),
        };
        return Ok(now + offset * sign);
    }
    DateTime::parse_from_rfc3339(text)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("cannot parse time '{text}': {e}"))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BookingError {
    #[error("booking must end after it starts")]
    EmptyInterval,
    #[error("overlaps booking {0} on the same environment")]
    Overlap(u64),
    #[error("booking id {0} already exists")]
    DuplicateId(u64),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BookingBook {
    bookings: Vec<Booking>,
}

impl BookingBook {
    /// Rebuilds the book, rejecting the first record that breaks an invariant.
    pub fn from_records(
        records: impl IntoIterator<Item = Booking>,
    ) -> Result<Self, (Booking, BookingError)> {
        let mut book = Self::default();
        for b in records {
            book.insert(b.clone()).map_err(|e| (b, e))?;
        }
        Ok(book)
    }

    pub fn check(&self, booking: &Booking) -> Result<(), BookingError> {
        if booking.end <= booking.start {
            return Err(BookingError::EmptyInterval);
        }
        if self
            .bookings
            .iter()
            .any(|b| b.booking_id == booking.booking_id)
        {
            return Err(BookingError::DuplicateId(booking.booking_id));
        }
        match self.bookings.iter().find(|b| b.overlaps(booking)) {
            Some(b) => Err(BookingError::Overlap(b.booking_id)),
            None => Ok(()),
        }
    }

    pub fn insert(&mut self, booking: Booking) -> Result<(), BookingError> {
        self.check(&booking)?;
        self.bookings.push(booking);
        Ok(())
    }

    pub fn next_id(&self) -> u64 {
        self.bookings
            .iter()
            .map(|b| b.booking_id)
            .max()
            .unwrap_or(0)
            + 1
    }

    pub fn covering(&self, user_id: &str, env_id: &str, now: DateTime<Utc>) -> Option<&Booking> {
        self.bookings
            .iter()
            .find(|b| b.user_id == user_id && b.env_id == env_id && b.covers(now))
    }

    /// Any booking of `user_id` active at `now`, on any environment.
    pub fn active_for_user(
        &self,
        user_id: &str,
        now: DateTime<Utc>,
    ) -> impl Iterator<Item = &Booking> + '_ {
        let user_id = user_id.to_owned();
        self.bookings
            .iter()
            .filter(move |b| b.user_id == user_id && b.covers(now))
    }

    pub fn all(&self) -> &[Booking] {
        &self.bookings
    }
}
