use alloc::vec::Vec;

/// Cumulative per-flow packet accounting over an episode. Every generated
/// packet ends in exactly one of the other buckets or is still queued.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowCounters {
    pub generated: u64,
    pub delivered_on_time: u64,
    pub delivered_late: u64,
    pub dropped_overflow: u64,
}

impl FlowCounters {
    pub fn resolved(&self) -> u64 {
        self.delivered_on_time + self.delivered_late + self.dropped_overflow
    }
}

/// One flow's indicators over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowKpi {
    pub throughput_mbps: f64,
    pub goodput_mbps: f64,
    pub mean_delay_ms: f64,
    pub jitter_ms: f64,
    pub pdr: f64,
    /// Packet counts observed within this window.
    pub window: FlowCounters,
}

/// A traffic class aggregated over its flows.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeKpi {
    pub throughput_mbps: f64,
    pub goodput_mbps: f64,
    pub mean_delay_ms: f64,
    pub jitter_ms: f64,
    pub pdr: f64,
    pub xqi: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiWindow {
    pub flows: Vec<FlowKpi>,
    pub types: [TypeKpi; 3],
    /// Time-averaged RLC buffer occupancy ratio over the window.
    pub buffer_occupancy: f64,
    /// Occupancy ratio at the end of the window.
    pub buffer_occupancy_end: f64,
    /// Per-UE link rate used during the window, Mbps.
    pub link_rate_mbps: [f64; 3],
    /// Codec rates applied during the window, Mbps.
    pub rates_mbps: [f64; 3],
}

impl KpiWindow {
    /// Throughput of every flow, the vector the done rule inspects.
    pub fn flow_throughputs(&self) -> impl Iterator<Item = f64> + '_ {
        self.flows.iter().map(|f| f.throughput_mbps)
    }
}

/// Per-window raw measurements accumulated by the simulator.
#[derive(Debug, Clone, Default)]
pub(crate) struct FlowWindowStats {
    pub counts: FlowCounters,
    pub delivered_bits: f64,
    pub goodput_bits: f64,
    pub delays_ms: Vec<f64>,
    pub pending_at_end: u64,
}

impl FlowWindowStats {
    pub(crate) fn merge(stats: &[&FlowWindowStats]) -> FlowWindowStats {
        let mut out = FlowWindowStats::default();
        for s in stats {
            out.counts.generated += s.counts.generated;
            out.counts.delivered_on_time += s.counts.delivered_on_time;
            out.counts.delivered_late += s.counts.delivered_late;
            out.counts.dropped_overflow += s.counts.dropped_overflow;
            out.delivered_bits += s.delivered_bits;
            out.goodput_bits += s.goodput_bits;
            out.delays_ms.extend_from_slice(&s.delays_ms);
            out.pending_at_end += s.pending_at_end;
        }
        out
    }

    /// Delivered-on-time share of the packets whose fate was decided in the
    /// window. With nothing decided the ratio is 1 for an idle flow and 0
    /// for a flow whose packets are all stuck in the buffer.
    pub(crate) fn pdr(&self) -> f64 {
        let resolved = self.counts.resolved();
        if resolved == 0 {
            if self.pending_at_end == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.counts.delivered_on_time as f64 / resolved as f64
        }
    }

    pub(crate) fn pdr_percent(&self) -> f64 {
        let resolved = self.counts.resolved();
        if resolved == 0 {
            self.pdr() * 100.0
        } else {
            self.counts.delivered_on_time as f64 * 100.0 / resolved as f64
        }
    }

    /// Mean and population standard deviation of packet delay. A window with
    /// no delivery reports the window length as its delay.
    pub(crate) fn delay_stats(&self, window_ms: f64) -> (f64, f64) {
        let n = self.delays_ms.len();
        if n == 0 {
            return (window_ms, 0.0);
        }
        let mean = self.delays_ms.iter().sum::<f64>() / n as f64;
        let var = self.delays_ms.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
        (mean, libm::sqrt(var))
    }
}
