//! Hardware configuration. Every field has a default; a TOML file only
//! needs the keys it overrides.
//!
//! Timing and structure defaults follow the evaluated SSD. Values marked
//! "model constant" have no published counterpart and are stand-ins.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::trace::OpClass;
use crate::{Error, Result};

pub const GIB: u64 = 1 << 30;

/// The shipped defaults file; parses to `HardwareConfig::default()`.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../config/hardware.toml");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsdConfig {
    pub channels: u32,
    pub chips_per_channel: u32,
    pub t_dma_s: f64,
    pub t_read_page_s: f64,
    /// Page program time (model constant).
    pub t_prog_page_s: f64,
    /// Per-channel flash bus bandwidth, bytes/s.
    pub flash_channel_bw: f64,
    /// Host link (one PCIe lane), bytes/s.
    pub external_link_bw: f64,
    /// SSD-to-FPGA link of the SmartSSD design, bytes/s.
    pub smartssd_link_bw: f64,
    /// Controller-to-DRAM bus, bytes/s (model constant).
    pub dram_bus_bw: f64,
    pub page_size: u64,
}

impl Default for SsdConfig {
    fn default() -> Self {
        SsdConfig {
            channels: 8,
            chips_per_channel: 8,
            t_dma_s: 16e-6,
            t_read_page_s: 22.5e-6,
            t_prog_page_s: 500e-6,
            flash_channel_bw: 1e9,
            external_link_bw: 1.2e9,
            smartssd_link_bw: 3e9,
            dram_bus_bw: 12.8e9,
            page_size: 16 * 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DramConfig {
    pub capacity_bytes: u64,
    pub banks: u32,
    pub subarrays: u32,
    pub rows_per_subarray: u32,
    pub row_bytes: u32,
    /// Share of capacity holding one index region.
    pub index_fraction: f64,
    /// Activate-compare-precharge time of one row sweep step (model constant).
    pub t_row_s: f64,
}

impl Default for DramConfig {
    fn default() -> Self {
        DramConfig {
            capacity_bytes: 4 * GIB,
            banks: 16,
            subarrays: 512,
            rows_per_subarray: 256,
            row_bytes: 2048,
            index_fraction: 0.65,
            t_row_s: 50e-9,
        }
    }
}

impl DramConfig {
    /// Capacity and subarray count multiplied by `factor`.
    pub fn scaled(&self, factor: u32) -> DramConfig {
        DramConfig {
            capacity_bytes: self.capacity_bytes * factor as u64,
            subarrays: self.subarrays * factor,
            ..*self
        }
    }

    /// `index_fraction` in parts per million, so region arithmetic stays
    /// in integers.
    pub fn index_fraction_ppm(&self) -> u64 {
        (self.index_fraction * 1e6).round() as u64
    }

    /// Bytes of one index region (floor).
    pub fn region_bytes(&self) -> u64 {
        (self.capacity_bytes as u128 * self.index_fraction_ppm() as u128 / 1_000_000) as u64
    }

    pub fn geometry_bytes(&self) -> u64 {
        self.banks as u64 * self.subarrays as u64 * self.rows_per_subarray as u64 * self.row_bytes as u64
    }
}

/// Cycles per operation on one arithmetic unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleTable {
    pub add: u64,
    pub compare: u64,
    pub multiply: u64,
    pub divide: u64,
}

impl Default for CycleTable {
    fn default() -> Self {
        CycleTable {
            add: 1,
            compare: 1,
            multiply: 4,
            divide: 16,
        }
    }
}

impl CycleTable {
    pub fn cycles(&self, class: OpClass) -> u64 {
        match class {
            OpClass::Add => self.add,
            OpClass::Compare => self.compare,
            OpClass::Multiply => self.multiply,
            OpClass::Divide => self.divide,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitConfig {
    pub arithmetic_units: u32,
    pub arithmetic_freq_hz: f64,
    pub cycles: CycleTable,
    /// One querying unit per this many subarrays (512 units at 16 x 512).
    pub subarrays_per_query_unit: u32,
    pub sorter_units: u32,
    pub sorter_freq_hz: f64,
    /// Anchors a merger holds on chip before spilling to DRAM (model constant).
    pub merger_buffer_entries: u64,
    /// Bit-serial cycle multipliers.
    pub bitserial_add_factor: u64,
    pub bitserial_mul_factor: u64,
}

impl Default for UnitConfig {
    fn default() -> Self {
        UnitConfig {
            arithmetic_units: 256,
            arithmetic_freq_hz: 164e6,
            cycles: CycleTable::default(),
            subarrays_per_query_unit: 16,
            sorter_units: 8,
            sorter_freq_hz: 1e9,
            merger_buffer_entries: 4096,
            bitserial_add_factor: 16,
            bitserial_mul_factor: 256,
        }
    }
}

/// Energy table in picojoules. All entries are model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub add_pj: f64,
    pub compare_pj: f64,
    pub multiply_pj: f64,
    pub divide_pj: f64,
    pub lookup_pj: f64,
    pub sort_stage_pj: f64,
    pub comparator_pj: f64,
    pub merge_step_pj: f64,
    pub flash_read_pj_per_byte: f64,
    pub flash_write_pj_per_byte: f64,
    pub dram_bus_pj_per_byte: f64,
    pub smartssd_link_pj_per_byte: f64,
    pub external_link_pj_per_byte: f64,
    /// Scale on arithmetic op energy for bit-serial units.
    pub bitserial_energy_factor: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            add_pj: 1.0,
            compare_pj: 1.0,
            multiply_pj: 4.0,
            divide_pj: 16.0,
            lookup_pj: 20.0,
            sort_stage_pj: 2.0,
            comparator_pj: 0.5,
            merge_step_pj: 2.0,
            flash_read_pj_per_byte: 20.0,
            flash_write_pj_per_byte: 40.0,
            dram_bus_pj_per_byte: 4.0,
            smartssd_link_pj_per_byte: 30.0,
            external_link_pj_per_byte: 60.0,
            bitserial_energy_factor: 0.25,
        }
    }
}

impl EnergyConfig {
    pub fn op_pj(&self, class: OpClass) -> f64 {
        match class {
            OpClass::Add => self.add_pj,
            OpClass::Compare => self.compare_pj,
            OpClass::Multiply => self.multiply_pj,
            OpClass::Divide => self.divide_pj,
            OpClass::Lookup => self.lookup_pj,
            OpClass::SortStage => self.sort_stage_pj,
            OpClass::Comparator => self.comparator_pj,
            OpClass::MergeStep => self.merge_step_pj,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareConfig {
    pub ssd: SsdConfig,
    pub dram: DramConfig,
    pub units: UnitConfig,
    pub energy: EnergyConfig,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn nonzero(name: &str, v: u64) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive")))
    }
}

impl HardwareConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.ssd;
        nonzero("ssd.channels", s.channels as u64)?;
        nonzero("ssd.chips_per_channel", s.chips_per_channel as u64)?;
        nonzero("ssd.page_size", s.page_size)?;
        for (n, v) in [
            ("ssd.t_dma_s", s.t_dma_s),
            ("ssd.t_read_page_s", s.t_read_page_s),
            ("ssd.t_prog_page_s", s.t_prog_page_s),
            ("ssd.flash_channel_bw", s.flash_channel_bw),
            ("ssd.external_link_bw", s.external_link_bw),
            ("ssd.smartssd_link_bw", s.smartssd_link_bw),
            ("ssd.dram_bus_bw", s.dram_bus_bw),
        ] {
            positive(n, v)?;
        }
        let d = &self.dram;
        nonzero("dram.capacity_bytes", d.capacity_bytes)?;
        nonzero("dram.banks", d.banks as u64)?;
        nonzero("dram.subarrays", d.subarrays as u64)?;
        nonzero("dram.rows_per_subarray", d.rows_per_subarray as u64)?;
        nonzero("dram.row_bytes", d.row_bytes as u64)?;
        positive("dram.t_row_s", d.t_row_s)?;
        if !(d.index_fraction > 0.0 && d.index_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "dram.index_fraction must be in (0, 1], got {}",
                d.index_fraction
            )));
        }
        let geo = d.geometry_bytes();
        if geo > 2 * d.capacity_bytes || d.capacity_bytes > 2 * geo {
            return Err(Error::Config(format!(
                "dram geometry ({geo} bytes) does not match capacity {} within 2x",
                d.capacity_bytes
            )));
        }
        let u = &self.units;
        nonzero("units.arithmetic_units", u.arithmetic_units as u64)?;
        positive("units.arithmetic_freq_hz", u.arithmetic_freq_hz)?;
        nonzero("units.subarrays_per_query_unit", u.subarrays_per_query_unit as u64)?;
        nonzero("units.sorter_units", u.sorter_units as u64)?;
        positive("units.sorter_freq_hz", u.sorter_freq_hz)?;
        nonzero("units.bitserial_add_factor", u.bitserial_add_factor)?;
        nonzero("units.bitserial_mul_factor", u.bitserial_mul_factor)?;
        let e = &self.energy;
        for (n, v) in [
            ("add_pj", e.add_pj),
            ("compare_pj", e.compare_pj),
            ("multiply_pj", e.multiply_pj),
            ("divide_pj", e.divide_pj),
            ("lookup_pj", e.lookup_pj),
            ("sort_stage_pj", e.sort_stage_pj),
            ("comparator_pj", e.comparator_pj),
            ("merge_step_pj", e.merge_step_pj),
            ("flash_read_pj_per_byte", e.flash_read_pj_per_byte),
            ("flash_write_pj_per_byte", e.flash_write_pj_per_byte),
            ("dram_bus_pj_per_byte", e.dram_bus_pj_per_byte),
            ("smartssd_link_pj_per_byte", e.smartssd_link_pj_per_byte),
            ("external_link_pj_per_byte", e.external_link_pj_per_byte),
            ("bitserial_energy_factor", e.bitserial_energy_factor),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("energy.{n} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Querying units available with this DRAM geometry.
    pub fn query_units(&self) -> u64 {
        (self.dram.banks as u64 * self.dram.subarrays as u64 / self.units.subarrays_per_query_unit as u64)
            .max(1)
    }

    pub fn from_toml_str(text: &str) -> Result<HardwareConfig> {
        let cfg: HardwareConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<HardwareConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}
