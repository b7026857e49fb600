//! One-slot message buffer holding the latest labelled sensor publication.

use crate::sim::VehicleState;

/// A publication: the world snapshot the sensors saw, its label and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Publication {
    pub label: u64,
    pub time: f64,
    pub snapshot: VehicleState,
}

#[derive(Debug, Clone, Default)]
pub struct OneSlotBuffer {
    slot: Option<Publication>,
    next_label: u64,
}

impl OneSlotBuffer {
    pub fn new() -> Self {
        Self {
            slot: None,
            next_label: 1,
        }
    }

    /// Replaces the slot and returns the label assigned to the publication.
    pub fn publish(&mut self, time: f64, snapshot: VehicleState) -> u64 {
        let label = self.next_label;
        self.next_label += 1;
        self.slot = Some(Publication {
            label,
            time,
            snapshot,
        });
        label
    }

    pub fn latest(&self) -> Option<&Publication> {
        self.slot.as_ref()
    }

    pub fn latest_label(&self) -> Option<u64> {
        self.slot.map(|p| p.label)
    }
}
