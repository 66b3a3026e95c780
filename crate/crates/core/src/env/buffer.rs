use alloc::collections::VecDeque;
use alloc::vec::Vec;

/// Packet waiting in the RLC transmit buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueuedPacket {
    pub flow: usize,
    pub frame: u64,
    pub bytes: u32,
    pub arrival: f64,
}

/// Byte-limited transmit buffer with drop-tail admission.
///
/// All packets share one byte budget. Packets are kept in one FIFO lane per
/// receiving UE so that the scheduler can serve UEs side by side; order
/// within a lane is arrival order.
#[derive(Debug, Clone)]
pub struct RlcBuffer {
    capacity: u64,
    queued: u64,
    lanes: Vec<VecDeque<QueuedPacket>>,
}

impl RlcBuffer {
    /// Single-lane buffer.
    pub fn new(capacity_bytes: u64) -> Self {
        Self::with_lanes(capacity_bytes, 1)
    }

    pub fn with_lanes(capacity_bytes: u64, lanes: usize) -> Self {
        Self {
            capacity: capacity_bytes,
            queued: 0,
            lanes: (0..lanes.max(1)).map(|_| VecDeque::new()).collect(),
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn lanes(&self) -> usize {
        self.lanes.len()
    }

    pub fn queued_bytes(&self) -> u64 {
        self.queued
    }

    pub fn len(&self) -> usize {
        self.lanes.iter().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.iter().all(VecDeque::is_empty)
    }

    pub fn occupancy(&self) -> f64 {
        self.queued as f64 / self.capacity as f64
    }

    /// Enqueues `p` on `lane` if it fits; returns `false` when the packet is
    /// dropped.
    pub fn try_push_to(&mut self, lane: usize, p: QueuedPacket) -> bool {
        let size = u64::from(p.bytes);
        if self.queued + size > self.capacity {
            return false;
        }
        self.queued += size;
        self.lanes[lane].push_back(p);
        true
    }

    pub fn try_push(&mut self, p: QueuedPacket) -> bool {
        self.try_push_to(0, p)
    }

    pub fn front_of(&self, lane: usize) -> Option<&QueuedPacket> {
        self.lanes[lane].front()
    }

    pub fn pop_from(&mut self, lane: usize) -> Option<QueuedPacket> {
        let p = self.lanes[lane].pop_front()?;
        self.queued -= u64::from(p.bytes);
        Some(p)
    }

    pub fn front(&self) -> Option<&QueuedPacket> {
        self.front_of(0)
    }

    pub fn pop(&mut self) -> Option<QueuedPacket> {
        self.pop_from(0)
    }

    /// Every queued packet, lane by lane.
    pub fn iter(&self) -> impl Iterator<Item = &QueuedPacket> {
        self.lanes.iter().flat_map(|l| l.iter())
    }

    pub fn clear(&mut self) {
        self.lanes.iter_mut().for_each(VecDeque::clear);
        self.queued = 0;
    }
}
