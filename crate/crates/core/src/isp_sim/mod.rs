//! Analytical latency/energy model of the mapping pipeline running inside
//! an SSD, and of three comparison placements.
//!
//! A simulation replays an [`OperationTrace`]: arithmetic ops run on the
//! near-DRAM arithmetic units, hash lookups on the in-DRAM querying units
//! (with the index streamed from flash region by region), and the sort
//! step on the sorter/merger units in the controller. Steps run one after
//! another; the only overlap is index loading with querying.

mod config;
mod controller;
mod timing;

pub use config::{
    CycleTable, DramConfig, EnergyConfig, HardwareConfig, SsdConfig, UnitConfig, DEFAULT_CONFIG_TOML, GIB,
};
pub use controller::{mode_switch, Command, ControllerState, Mode};
pub use timing::{
    compute_time, flash_read_time, flash_write_time, io_time, partition_count, partitioned_query,
    query_time, region_sizes, PartitionedQuery,
};

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::trace::{OpClass, OperationTrace, Step, StepTrace, ANCHOR_BYTES};
use crate::{Error, Result};

const PJ: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    /// Every unit inside the SSD.
    Mars,
    /// Same computation on the host; data crosses the host link.
    MarsExternal,
    /// Arithmetic unit replaced by bit-serial in-DRAM computation.
    MarsBitSerial,
    /// Sorting on an FPGA behind the SmartSSD's internal link.
    MsSmartSsd,
}

impl System {
    pub const ALL: [System; 4] = [
        System::Mars,
        System::MsSmartSsd,
        System::MarsExternal,
        System::MarsBitSerial,
    ];

    pub fn label(self) -> &'static str {
        match self {
            System::Mars => "MARS",
            System::MarsExternal => "MARS-External",
            System::MarsBitSerial => "MARS-BitSerial",
            System::MsSmartSsd => "MS-SmartSSD",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<System> {
        System::ALL
            .into_iter()
            .find(|sys| sys.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownSystem(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    /// Pipeline step label, or `load_input`, `load_index`, `write_back`.
    pub step: String,
    pub compute_s: f64,
    pub movement_s: f64,
    pub energy_j: f64,
    pub bytes_moved: u64,
}

impl CostRow {
    pub fn latency_s(&self) -> f64 {
        self.compute_s + self.movement_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub system: System,
    pub partitions: u64,
    pub rows: Vec<CostRow>,
}

pub const REPORT_HEADER: &str = "step\tsystem\tlatency_s\tenergy_j\tbytes_moved";

impl CostReport {
    pub fn row(&self, step: &str) -> Option<&CostRow> {
        self.rows.iter().find(|r| r.step == step)
    }

    pub fn latency_s(&self) -> f64 {
        self.rows.iter().map(CostRow::latency_s).sum()
    }

    pub fn compute_s(&self) -> f64 {
        self.rows.iter().map(|r| r.compute_s).sum()
    }

    pub fn energy_j(&self) -> f64 {
        self.rows.iter().map(|r| r.energy_j).sum()
    }

    pub fn bytes_moved(&self) -> u64 {
        self.rows.iter().map(|r| r.bytes_moved).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.latency_s() == 0.0 && r.energy_j == 0.0 && r.bytes_moved == 0)
    }

    /// TSV rows without the header, ending with a `total` row.
    pub fn tsv_rows(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{:.9e}\t{:.9e}\t{}",
                r.step,
                self.system,
                r.latency_s(),
                r.energy_j,
                r.bytes_moved
            )
            .unwrap();
        }
        writeln!(
            out,
            "total\t{}\t{:.9e}\t{:.9e}\t{}",
            self.system,
            self.latency_s(),
            self.energy_j(),
            self.bytes_moved()
        )
        .unwrap();
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: latency {:.6} s (compute {:.6} s), energy {:.6} J, {} bytes moved, {} index region(s)",
            self.system,
            self.latency_s(),
            self.compute_s(),
            self.energy_j(),
            self.bytes_moved(),
            self.partitions
        )
    }
}

/// Header plus the rows of every report.
pub fn reports_to_tsv(reports: &[CostReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.tsv_rows());
    }
    out
}

const ARITH: [OpClass; 4] = [OpClass::Add, OpClass::Compare, OpClass::Multiply, OpClass::Divide];

fn arithmetic_cycles(st: &StepTrace, system: System, cfg: &HardwareConfig) -> u64 {
    let u = &cfg.units;
    ARITH
        .iter()
        .map(|&c| {
            let base = u.cycles.cycles(c);
            let cycles = match (system, c) {
                (System::MarsBitSerial, OpClass::Add | OpClass::Compare) => base * u.bitserial_add_factor,
                (System::MarsBitSerial, _) => base * u.bitserial_mul_factor,
                _ => base,
            };
            st.ops(c) * cycles
        })
        .sum()
}

fn op_energy_j(st: &StepTrace, system: System, cfg: &HardwareConfig, lookup_repeats: u64) -> f64 {
    let e = &cfg.energy;
    let arith_scale = if system == System::MarsBitSerial {
        e.bitserial_energy_factor
    } else {
        1.0
    };
    let mut pj = 0.0;
    for c in ARITH {
        pj += st.ops(c) as f64 * e.op_pj(c) * arith_scale;
    }
    pj += (st.ops(OpClass::Lookup) * lookup_repeats) as f64 * e.lookup_pj;
    for c in [OpClass::SortStage, OpClass::Comparator, OpClass::MergeStep] {
        pj += st.ops(c) as f64 * e.op_pj(c);
    }
    pj * PJ
}

/// Compute time of one step on the arithmetic and sorter units. Lookups
/// are costed separately by the partitioned query model.
pub fn step_compute_time(st: &StepTrace, system: System, cfg: &HardwareConfig) -> f64 {
    let u = &cfg.units;
    let arith = compute_time(
        arithmetic_cycles(st, system, cfg),
        u.arithmetic_units as u64,
        st.work_items,
        u.arithmetic_freq_hz,
    );
    let sorter = compute_time(
        st.ops(OpClass::SortStage) + st.ops(OpClass::MergeStep),
        u.sorter_units as u64,
        st.work_items,
        u.sorter_freq_hz,
    );
    arith + sorter
}

/// Bytes a merger must spill to DRAM and read back.
fn merge_spill_bytes(st: &StepTrace, cfg: &HardwareConfig) -> u64 {
    let held = cfg.units.merger_buffer_entries * st.work_items.max(1);
    2 * ANCHOR_BYTES * st.ops(OpClass::MergeStep).saturating_sub(held)
}

/// Data movement of one step: `(seconds, bytes, joules)`.
fn step_movement(step: Step, st: &StepTrace, system: System, cfg: &HardwareConfig) -> (f64, u64, f64) {
    let (ssd, e) = (&cfg.ssd, &cfg.energy);
    let mut t = 0.0;
    let mut bytes = 0;
    let mut pj = 0.0;
    if step == Step::Sort {
        let round_trip = st.bytes_in + st.bytes_out;
        let (bw, cost) = match system {
            System::Mars | System::MarsBitSerial => (ssd.dram_bus_bw, e.dram_bus_pj_per_byte),
            System::MsSmartSsd => (ssd.smartssd_link_bw, e.smartssd_link_pj_per_byte),
            System::MarsExternal => (ssd.external_link_bw, e.external_link_pj_per_byte),
        };
        t += io_time(round_trip, bw);
        bytes += round_trip;
        pj += round_trip as f64 * cost;
        let spill = merge_spill_bytes(st, cfg);
        t += io_time(spill, ssd.dram_bus_bw);
        bytes += spill;
        pj += spill as f64 * e.dram_bus_pj_per_byte;
    } else if system == System::MarsExternal {
        t += io_time(st.bytes_in, ssd.external_link_bw);
        bytes += st.bytes_in;
        pj += st.bytes_in as f64 * e.external_link_pj_per_byte;
    }
    (t, bytes, pj * PJ)
}

/// Costs `trace` on `system`.
///
/// Row order: `load_input`, `load_index`, the nine pipeline steps in
/// execution order, `write_back`. Querying time of steps 2d and 2e is
/// reported on those steps; `load_index` carries the part of the
/// partitioned phase not hidden behind querying.
pub fn simulate(trace: &OperationTrace, system: System, cfg: &HardwareConfig) -> Result<CostReport> {
    cfg.validate()?;
    if let Some(step) = trace.conservation_violation() {
        return Err(Error::InvalidArgument(format!(
            "trace is inconsistent: bytes entering step {} differ from bytes leaving its predecessor",
            step.label()
        )));
    }
    let (ssd, e) = (&cfg.ssd, &cfg.energy);
    let external = system == System::MarsExternal;
    let mut state = mode_switch(ControllerState::default(), Command::Init)?;
    let mut rows = Vec::with_capacity(Step::ALL.len() + 3);

    let load = |b: u64| {
        let mut t = flash_read_time(b, ssd);
        if external {
            t += io_time(b, ssd.external_link_bw);
        }
        t
    };
    let moved_energy = |b: u64| {
        let mut pj = b as f64 * e.flash_read_pj_per_byte;
        if external {
            pj += b as f64 * e.external_link_pj_per_byte;
        }
        pj * PJ
    };
    let crossings = if external { 2 } else { 1 };

    rows.push(CostRow {
        step: "load_input".into(),
        compute_s: 0.0,
        movement_s: load(trace.raw_bytes),
        energy_j: moved_energy(trace.raw_bytes),
        bytes_moved: crossings * trace.raw_bytes,
    });

    let lookups_d = trace.step(Step::FreqFilter).ops(OpClass::Lookup);
    let lookups_e = trace.step(Step::Query).ops(OpClass::Lookup);
    let pq = if lookups_d + lookups_e == 0 && trace.index_bytes == 0 {
        PartitionedQuery::default()
    } else {
        partitioned_query(trace.index_bytes, lookups_d + lookups_e, cfg, load)
    };
    rows.push(CostRow {
        step: "load_index".into(),
        compute_s: 0.0,
        movement_s: (pq.total_s - pq.query_s).max(0.0),
        energy_j: moved_energy(trace.index_bytes),
        bytes_moved: crossings * trace.index_bytes,
    });

    for step in Step::ALL {
        let st = trace.step(step);
        let mut compute = step_compute_time(st, system, cfg);
        let lookups = st.ops(OpClass::Lookup);
        if lookups > 0 {
            compute += pq.query_s * lookups as f64 / (lookups_d + lookups_e) as f64;
        }
        let (movement, bytes, move_j) = step_movement(step, st, system, cfg);
        rows.push(CostRow {
            step: step.label().into(),
            compute_s: compute,
            movement_s: movement,
            energy_j: op_energy_j(st, system, cfg, pq.partitions.max(1)) + move_j,
            bytes_moved: bytes,
        });
    }

    state = mode_switch(state, Command::Write { result_bytes: trace.result_bytes })?;
    let wb = state.result_bytes_written;
    let mut wb_t = flash_write_time(wb, ssd);
    let mut wb_pj = wb as f64 * e.flash_write_pj_per_byte;
    if external {
        wb_t += io_time(wb, ssd.external_link_bw);
        wb_pj += wb as f64 * e.external_link_pj_per_byte;
    }
    rows.push(CostRow {
        step: "write_back".into(),
        compute_s: 0.0,
        movement_s: wb_t,
        energy_j: wb_pj * PJ,
        bytes_moved: crossings * wb,
    });

    Ok(CostReport {
        system,
        partitions: pq.partitions,
        rows,
    })
}

/// One report per system, in [`System::ALL`] order.
pub fn simulate_all(trace: &OperationTrace, cfg: &HardwareConfig) -> Result<Vec<CostReport>> {
    System::ALL.iter().map(|&s| simulate(trace, s, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::rng;
    use proptest::prelude::*;
    use rand::Rng;

    /// A byte-conserving trace with random volumes and op counts.
    fn random_trace(seed: u64, index_bytes: u64) -> OperationTrace {
        let mut r = rng(seed);
        let mut t = OperationTrace::default();
        t.reads = r.random_range(1..1000);
        t.raw_bytes = r.random_range(0..50_000_000);
        t.index_bytes = index_bytes;
        t.result_bytes = 16 * t.reads;
        let mut bytes = t.raw_bytes;
        for step in Step::ALL {
            let st = t.step_mut(step);
            st.bytes_in = bytes;
            bytes = if step == Step::Chain {
                t.result_bytes
            } else if step == Step::Sort || step == Step::Bucketize {
                bytes
            } else {
                r.random_range(0..=bytes.max(1) * 2)
            };
            let st = t.step_mut(step);
            st.bytes_out = bytes;
            st.work_items = r.random_range(0..1_000_000);
            for class in [OpClass::Add, OpClass::Compare, OpClass::Multiply, OpClass::Divide] {
                st.add_ops(class, r.random_range(0..100_000_000));
            }
            match step {
                Step::FreqFilter | Step::Query => st.add_ops(OpClass::Lookup, r.random_range(0..10_000_000)),
                Step::Sort => {
                    st.add_ops(OpClass::SortStage, r.random_range(0..1_000_000));
                    st.add_ops(OpClass::Comparator, r.random_range(0..100_000_000));
                    st.add_ops(OpClass::MergeStep, r.random_range(0..10_000_000));
                }
                _ => {}
            }
        }
        t
    }

    fn add_only(adds: u64, work: u64) -> OperationTrace {
        let mut t = OperationTrace::default();
        let st = t.step_mut(Step::Chain);
        st.add_ops(OpClass::Add, adds);
        st.work_items = work;
        t
    }

    #[test]
    fn zero_trace_zero_report() {
        let cfg = HardwareConfig::default();
        for r in simulate_all(&OperationTrace::default(), &cfg).unwrap() {
            assert!(r.is_zero(), "{}", r.system);
            assert_eq!(r.partitions, 0);
        }
    }

    #[test]
    fn add_latency_example() {
        let cfg = HardwareConfig::default();
        let r = simulate(&add_only(256_000_000, 1 << 20), System::Mars, &cfg).unwrap();
        assert!((r.latency_s() - 1e6 / 164e6).abs() < 1e-15);
        let mut half = cfg;
        half.units.arithmetic_units = 128;
        let h = simulate(&add_only(256_000_000, 1 << 20), System::Mars, &half).unwrap();
        assert_eq!(h.latency_s(), 2.0 * r.latency_s());
    }

    #[test]
    fn bit_serial_is_at_least_16x_on_adds() {
        let cfg = HardwareConfig::default();
        for (adds, work) in [(1u64, 1u64), (1000, 3), (256_000_000, 1 << 20)] {
            let pnm = simulate(&add_only(adds, work), System::Mars, &cfg).unwrap();
            let bs = simulate(&add_only(adds, work), System::MarsBitSerial, &cfg).unwrap();
            assert!(bs.compute_s() >= 16.0 * pnm.compute_s());
            assert!(bs.energy_j() < pnm.energy_j());
        }
    }

    #[test]
    fn labels_round_trip() {
        for s in System::ALL {
            assert_eq!(s.label().parse::<System>().unwrap(), s);
        }
        assert_eq!("mars-external".parse::<System>().unwrap(), System::MarsExternal);
        assert!(matches!("GPU".parse::<System>(), Err(Error::UnknownSystem(_))));
    }

    #[test]
    fn inconsistent_trace_rejected() {
        let mut t = random_trace(1, 1 << 20);
        t.step_mut(Step::Vote).bytes_in += 1;
        assert!(simulate(&t, System::Mars, &HardwareConfig::default()).is_err());
    }

    #[test]
    fn report_tsv_totals() {
        let cfg = HardwareConfig::default();
        let reports = simulate_all(&random_trace(3, 5 << 20), &cfg).unwrap();
        let text = reports_to_tsv(&reports);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(REPORT_HEADER));
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
        assert_eq!(rows.len(), 4 * (Step::ALL.len() + 4));
        for r in &reports {
            let total = rows
                .iter()
                .find(|f| f[0] == "total" && f[1] == r.system.label())
                .unwrap();
            let parts: u64 = r.rows.iter().map(|x| x.bytes_moved).sum();
            assert_eq!(total[4].parse::<u64>().unwrap(), parts);
            let sum: f64 = r.rows.iter().map(CostRow::latency_s).sum();
            assert!((total[2].parse::<f64>().unwrap() - sum).abs() <= 1e-9 * sum.max(1e-30));
        }
    }

    #[test]
    fn write_back_follows_result_bytes() {
        let cfg = HardwareConfig::default();
        let mut t = OperationTrace::default();
        t.result_bytes = 16;
        t.step_mut(Step::Chain).bytes_out = 16;
        let r = simulate(&t, System::Mars, &cfg).unwrap();
        let wb = r.row("write_back").unwrap();
        assert_eq!(wb.bytes_moved, 16);
        assert!(wb.latency_s() >= cfg.ssd.t_prog_page_s);
    }

    #[test]
    fn energy_is_linear_in_ops() {
        let cfg = HardwareConfig::default();
        let mut t = OperationTrace::default();
        for (i, step) in Step::ALL.into_iter().enumerate() {
            let st = t.step_mut(step);
            st.add_ops(OpClass::Add, 1000 * (i as u64 + 1));
            st.add_ops(OpClass::Divide, 7);
            st.add_ops(OpClass::Comparator, 33);
            st.work_items = 50;
        }
        for s in System::ALL {
            let one = simulate(&t, s, &cfg).unwrap().energy_j();
            let two = simulate(&t.scale_ops(2), s, &cfg).unwrap().energy_j();
            assert!((two - 2.0 * one).abs() <= 1e-12 * one, "{s}");
        }
    }

    #[test]
    fn dram_doubling_on_large_index() {
        let cfg = HardwareConfig::default();
        let big = HardwareConfig { dram: cfg.dram.scaled(2), ..cfg };
        let t = random_trace(9, 52 * GIB);
        let a = simulate(&t, System::Mars, &cfg).unwrap();
        let b = simulate(&t, System::Mars, &big).unwrap();
        assert_eq!((a.partitions, b.partitions), (20, 10));
        assert!(b.latency_s() <= a.latency_s());
        assert!(a.latency_s() / b.latency_s() <= 2.0);
    }

    fn ordered(t: &OperationTrace, cfg: &HardwareConfig) -> std::result::Result<(), TestCaseError> {
        let mars = simulate(t, System::Mars, cfg).unwrap();
        let smart = simulate(t, System::MsSmartSsd, cfg).unwrap();
        let ext = simulate(t, System::MarsExternal, cfg).unwrap();
        prop_assert!(mars.latency_s() <= smart.latency_s());
        prop_assert!(smart.latency_s() <= ext.latency_s());
        prop_assert!(mars.energy_j() <= ext.energy_j());
        for r in [&mars, &smart, &ext] {
            prop_assert!(r.rows.iter().all(|x| x.latency_s() >= 0.0 && x.energy_j >= 0.0));
        }
        Ok(())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn placement_ordering(seed: u64, index in 0u64..(200 * GIB)) {
            ordered(&random_trace(seed, index), &HardwareConfig::default())?;
        }

        #[test]
        fn more_dram_never_slower(seed: u64, index in 0u64..(200 * GIB)) {
            let cfg = HardwareConfig::default();
            let big = HardwareConfig { dram: cfg.dram.scaled(2), ..cfg };
            let t = random_trace(seed, index);
            for s in System::ALL {
                let a = simulate(&t, s, &cfg).unwrap().latency_s();
                let b = simulate(&t, s, &big).unwrap().latency_s();
                prop_assert!(b <= a * (1.0 + 1e-12), "{s}: {a} -> {b}");
                prop_assert!(a <= 2.0 * b * (1.0 + 1e-12), "{s}: {a} -> {b}");
            }
        }

        #[test]
        fn bandwidth_and_units_are_monotone(seed: u64, index in 0u64..(20 * GIB), which in 0usize..7) {
            let cfg = HardwareConfig::default();
            let mut fast = cfg;
            match which {
                0 => fast.ssd.flash_channel_bw *= 2.0,
                1 => fast.ssd.external_link_bw *= 2.0,
                2 => fast.ssd.smartssd_link_bw *= 2.0,
                3 => fast.ssd.dram_bus_bw *= 2.0,
                4 => fast.units.arithmetic_units *= 2,
                5 => fast.units.sorter_units *= 2,
                _ => fast.units.subarrays_per_query_unit = 8,
            }
            let t = random_trace(seed, index);
            for s in System::ALL {
                let a = simulate(&t, s, &cfg).unwrap();
                let b = simulate(&t, s, &fast).unwrap();
                prop_assert!(b.latency_s() <= a.latency_s() * (1.0 + 1e-12));
                prop_assert!(b.compute_s() <= a.compute_s() * (1.0 + 1e-12));
            }
        }

        #[test]
        fn deterministic(seed: u64) {
            let t = random_trace(seed, 1 << 30);
            let cfg = HardwareConfig::default();
            prop_assert_eq!(
                reports_to_tsv(&simulate_all(&t, &cfg).unwrap()),
                reports_to_tsv(&simulate_all(&t, &cfg).unwrap())
            );
        }
    }
}
