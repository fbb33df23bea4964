//! Closed-form timing primitives.

use super::config::{DramConfig, HardwareConfig, SsdConfig};

/// Seconds to move `bytes` at `bandwidth` bytes/s.
pub fn io_time(bytes: u64, bandwidth: f64) -> f64 {
    if bytes == 0 {
        0.0
    } else {
        bytes as f64 / bandwidth
    }
}

fn pages_per_channel(bytes: u64, ssd: &SsdConfig) -> u64 {
    let pages = bytes.div_ceil(ssd.page_size);
    // Round-robin striping: channel 0 receives the most pages.
    pages.div_ceil(ssd.channels as u64)
}

/// Flash read latency.
///
/// Pages are striped round-robin over the channels. On one channel holding
/// `p` pages:
///
/// ```text
/// t = t_dma + t_R + xfer + (p - 1) * max(t_R / chips_per_channel, xfer)
/// ```
///
/// where `xfer = page_size / flash_channel_bw`. The first page pays the
/// command DMA, the array read and its transfer; later pages are
/// pipelined, limited either by the channel bus or by array reads spread
/// over the channel's chips. The result is the slowest channel.
pub fn flash_read_time(bytes: u64, ssd: &SsdConfig) -> f64 {
    let p = pages_per_channel(bytes, ssd);
    if p == 0 {
        return 0.0;
    }
    let xfer = ssd.page_size as f64 / ssd.flash_channel_bw;
    let step = (ssd.t_read_page_s / ssd.chips_per_channel as f64).max(xfer);
    ssd.t_dma_s + ssd.t_read_page_s + xfer + (p - 1) as f64 * step
}

/// Flash program latency: transfers are serial per channel and page
/// programs overlap across the channel's chips.
pub fn flash_write_time(bytes: u64, ssd: &SsdConfig) -> f64 {
    let p = pages_per_channel(bytes, ssd);
    if p == 0 {
        return 0.0;
    }
    let xfer = ssd.page_size as f64 / ssd.flash_channel_bw;
    ssd.t_dma_s + p as f64 * xfer + p.div_ceil(ssd.chips_per_channel as u64) as f64 * ssd.t_prog_page_s
}

/// `cycles` spread over `min(units, work_items)` units at `freq_hz`.
pub fn compute_time(cycles: u64, units: u64, work_items: u64, freq_hz: f64) -> f64 {
    if cycles == 0 {
        return 0.0;
    }
    let used = units.min(work_items).max(1);
    cycles as f64 / (freq_hz * used as f64)
}

/// Number of index regions: `ceil(index / (capacity * fraction))`, in
/// exact integer arithmetic.
pub fn partition_count(index_bytes: u64, dram: &DramConfig) -> u64 {
    let num = index_bytes as u128 * 1_000_000;
    let den = dram.capacity_bytes as u128 * dram.index_fraction_ppm() as u128;
    num.div_ceil(den.max(1)) as u64
}

/// Sizes of the regions an index is split into, as even as possible.
pub fn region_sizes(index_bytes: u64, dram: &DramConfig) -> Vec<u64> {
    let p = partition_count(index_bytes, dram);
    (0..p)
        .map(|i| index_bytes / p + u64::from(i < index_bytes % p))
        .collect()
}

/// Querying-unit time for `keys` lookups against a region of
/// `region_bytes`.
///
/// Keys are broadcast in batches of one DRAM row (`row_bytes / 4` hashes).
/// Each batch is compared against every row of the region; the querying
/// units sweep their rows in parallel, one row activation per step.
pub fn query_time(keys: u64, region_bytes: u64, cfg: &HardwareConfig) -> f64 {
    if keys == 0 || region_bytes == 0 {
        return 0.0;
    }
    let row = cfg.dram.row_bytes as u64;
    let batches = keys.div_ceil((row / 4).max(1));
    let rows = region_bytes.div_ceil(row);
    let sweeps = rows.div_ceil(cfg.query_units());
    (batches * sweeps) as f64 * cfg.dram.t_row_s
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PartitionedQuery {
    pub partitions: u64,
    /// Sum of per-region load times.
    pub load_s: f64,
    /// Sum of per-region query times.
    pub query_s: f64,
    /// Wall time with loading of region i+1 overlapped with querying region i.
    pub total_s: f64,
}

/// Loads the index region by region and queries each one while the next
/// is loading:
///
/// ```text
/// total = load(1) + sum_i max(query(i), load(i + 1))
/// ```
///
/// `load` maps a region size to its load time.
pub fn partitioned_query(
    index_bytes: u64,
    keys: u64,
    cfg: &HardwareConfig,
    load: impl Fn(u64) -> f64,
) -> PartitionedQuery {
    let sizes = region_sizes(index_bytes, &cfg.dram);
    let loads: Vec<f64> = sizes.iter().map(|&b| load(b)).collect();
    let queries: Vec<f64> = sizes.iter().map(|&b| query_time(keys, b, cfg)).collect();
    let mut total = loads.first().copied().unwrap_or(0.0);
    for i in 0..sizes.len() {
        let next = loads.get(i + 1).copied().unwrap_or(0.0);
        total += queries[i].max(next);
    }
    PartitionedQuery {
        partitions: sizes.len() as u64,
        load_s: loads.iter().sum(),
        query_s: queries.iter().sum(),
        total_s: total,
    }
}
