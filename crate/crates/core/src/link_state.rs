//! Per-slot residual capacity and allocation ledger for one link.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, WindowError};
use crate::model::{AllocationProfile, RequestId, Slot, DUST, EPS};

/// One request's share of one slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alloc {
    pub request: RequestId,
    pub deadline: Slot,
    pub amount: f64,
}

/// Residual capacities for slots `base..=base + horizon`, where `base` is the
/// current slot, plus the allocations that consumed them.
///
/// Each slot's allocations are kept sorted by `(deadline, request)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinkState {
    capacity: f64,
    base: Slot,
    residual: VecDeque<f64>,
    cells: VecDeque<Vec<Alloc>>,
}

impl LinkState {
    pub fn new(capacity: f64, horizon: u64) -> Result<Self, ModelError> {
        Self::starting_at(capacity, horizon, 0)
    }

    pub fn starting_at(capacity: f64, horizon: u64, base: Slot) -> Result<Self, ModelError> {
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(ModelError::BadCapacity(capacity));
        }
        if horizon == 0 {
            return Err(ModelError::ZeroHorizon);
        }
        let len = horizon as usize + 1;
        Ok(Self {
            capacity,
            base,
            residual: std::iter::repeat_n(capacity, len).collect(),
            cells: std::iter::repeat_with(Vec::new).take(len).collect(),
        })
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// The current slot.
    pub fn base(&self) -> Slot {
        self.base
    }

    /// Number of future slots tracked beyond the current one.
    pub fn horizon(&self) -> u64 {
        self.residual.len() as u64 - 1
    }

    /// Last tracked slot.
    pub fn end(&self) -> Slot {
        self.base + self.horizon()
    }

    /// Extends the tracked range so that slot `slot` is covered.
    pub fn ensure_covers(&mut self, slot: Slot) {
        while self.end() < slot {
            self.residual.push_back(self.capacity);
            self.cells.push_back(Vec::new());
        }
    }

    fn idx(&self, slot: Slot) -> usize {
        assert!(
            slot >= self.base && slot <= self.end(),
            "slot {slot} outside [{}, {}]",
            self.base,
            self.end()
        );
        (slot - self.base) as usize
    }

    pub fn residual(&self, slot: Slot) -> f64 {
        self.residual[self.idx(slot)]
    }

    pub fn used(&self, slot: Slot) -> f64 {
        self.capacity - self.residual(slot)
    }

    fn check_window(&self, from: Slot, to: Slot) -> Result<(), WindowError> {
        if from + 1 < self.base || to <= from || to > self.end() {
            return Err(WindowError {
                from,
                to,
                base: self.base,
                end: self.end(),
            });
        }
        Ok(())
    }

    fn window_range(&self, from: Slot, to: Slot) -> std::ops::RangeInclusive<usize> {
        ((from + 1 - self.base) as usize)..=((to - self.base) as usize)
    }

    /// Residual capacities of the slots in `(from, to]`, in slot order. The
    /// first slot of the window may be the current one.
    pub fn window(&self, from: Slot, to: Slot) -> Result<Vec<f64>, WindowError> {
        self.check_window(from, to)?;
        Ok(self.residual.range(self.window_range(from, to)).copied().collect())
    }

    /// Total residual capacity over `(from, to]`.
    pub fn window_residual(&self, from: Slot, to: Slot) -> Result<f64, WindowError> {
        self.check_window(from, to)?;
        Ok(self.residual.range(self.window_range(from, to)).sum())
    }

    pub fn entries(&self, slot: Slot) -> &[Alloc] {
        &self.cells[self.idx(slot)]
    }

    /// Books `amount` for `request` at `slot`. The caller has checked capacity;
    /// overshoot within tolerance is clamped.
    pub fn allocate(&mut self, request: RequestId, deadline: Slot, slot: Slot, amount: f64) {
        if amount <= DUST {
            return;
        }
        let i = self.idx(slot);
        debug_assert!(
            amount <= self.residual[i] + EPS,
            "overbooking slot {slot}: {amount} > {}",
            self.residual[i]
        );
        let r = &mut self.residual[i];
        *r -= amount;
        if *r < DUST {
            *r = 0.0;
        }
        let cell = &mut self.cells[i];
        match cell.binary_search_by(|a| (a.deadline, a.request).cmp(&(deadline, request))) {
            Ok(j) => cell[j].amount += amount,
            Err(j) => cell.insert(
                j,
                Alloc {
                    request,
                    deadline,
                    amount,
                },
            ),
        }
    }

    /// Frees up to `amount` of `request`'s booking at `slot`; returns what was freed.
    pub fn deallocate(&mut self, request: RequestId, deadline: Slot, slot: Slot, amount: f64) -> f64 {
        let i = self.idx(slot);
        let cell = &mut self.cells[i];
        let Ok(j) = cell.binary_search_by(|a| (a.deadline, a.request).cmp(&(deadline, request)))
        else {
            return 0.0;
        };
        let freed = amount.min(cell[j].amount);
        cell[j].amount -= freed;
        if cell[j].amount <= DUST {
            cell.remove(j);
        }
        let r = &mut self.residual[i];
        *r = (*r + freed).min(self.capacity);
        freed
    }

    /// Frees every booking of `request` in `(after, deadline]` and returns them.
    pub fn release(&mut self, request: RequestId, deadline: Slot, after: Slot) -> AllocationProfile {
        let mut freed = AllocationProfile::new();
        let last = deadline.min(self.end());
        for t in after + 1..=last {
            let amount = self.deallocate(request, deadline, t, f64::INFINITY);
            freed.add(t, amount);
        }
        freed
    }

    /// Bookings of `request` over `[from, deadline]`.
    pub fn profile_of(&self, request: RequestId, deadline: Slot, from: Slot) -> AllocationProfile {
        let last = deadline.min(self.end());
        (from.max(self.base)..=last)
            .filter_map(|t| {
                self.entries(t)
                    .iter()
                    .find(|a| a.request == request)
                    .map(|a| (t, a.amount))
            })
            .collect()
    }

    /// Drops the current slot and opens a fresh one at the far end. Returns the
    /// bookings of the dropped slot.
    pub fn rotate(&mut self) -> Vec<Alloc> {
        self.residual.pop_front();
        let sent = self.cells.pop_front().unwrap_or_default();
        self.residual.push_back(self.capacity);
        self.cells.push_back(Vec::new());
        self.base += 1;
        sent
    }

    /// All bookings grouped by request.
    pub fn ledger(&self) -> BTreeMap<RequestId, AllocationProfile> {
        let mut out: BTreeMap<RequestId, AllocationProfile> = BTreeMap::new();
        for (i, cell) in self.cells.iter().enumerate() {
            for a in cell {
                out.entry(a.request)
                    .or_default()
                    .add(self.base + i as u64, a.amount);
            }
        }
        out
    }

    /// Verifies `capacity - residual[t] == sum of bookings at t` and the
    /// residual bounds for every tracked slot.
    pub fn check_conservation(&self) -> Result<(), String> {
        for (i, (r, cell)) in self.residual.iter().zip(&self.cells).enumerate() {
            let t = self.base + i as u64;
            if *r < -EPS || *r > self.capacity + EPS {
                return Err(format!("slot {t}: residual {r} outside [0, {}]", self.capacity));
            }
            let booked: f64 = cell.iter().map(|a| a.amount).sum();
            if (self.capacity - r - booked).abs() > EPS {
                return Err(format!(
                    "slot {t}: capacity {} - residual {r} != booked {booked}",
                    self.capacity
                ));
            }
        }
        Ok(())
    }
}
