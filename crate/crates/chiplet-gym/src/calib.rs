//! Calibration tables: tech-node yield/price parameters, interconnect
//! properties, wire and router delays, packaging-cost regression
//! coefficients, reward weights, and model knobs.
//!
//! Everything loads from a single JSON file (see `calib/default.json` in the
//! repository root); [`Calibration::default`] carries the same built-in
//! values. Defect density and the cluster parameter are fitted so that 826 /
//! 26 / 14 mm^2 dies at 7 nm yield 48% / 97.5% / 98.7%. Packaging-cost
//! coefficients, PE area, and MAC energy are vendor-calibration placeholders:
//! they set plausible magnitudes and orderings, not ground truth.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design_space::{Ic2p5d, Ic3d, PackageConstraints};

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("cannot read calibration file: {0}")]
    Io(#[from] std::io::Error),
    #[error("calibration file does not parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid calibration: {0}")]
    Invalid(String),
}

/// Process-node parameters for yield, price, and per-PE figures.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechNode {
    pub name: String,
    /// Defect density d, defects per cm^2.
    pub defect_density_per_cm2: f64,
    /// Negative-binomial cluster parameter.
    pub cluster_alpha: f64,
    /// Wafer price per mm^2 of silicon (arbitrary currency unit).
    pub unit_price_per_mm2: f64,
    /// Silicon area of one processing element (MAC + register file), mm^2.
    pub pe_area_mm2: f64,
    /// Energy of one MAC operation, pJ.
    pub e_mac_pj: f64,
    /// Arithmetic cycles per MAC.
    pub cycle_op: f64,
    /// Accelerator clock, Hz.
    pub clock_hz: f64,
}

/// Interconnect identifier, shared by the property table and the
/// packaging-cost coefficient table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IcName {
    #[serde(rename = "CoWoS")]
    Cowos,
    #[serde(rename = "EMIB")]
    Emib,
    #[serde(rename = "SoIC")]
    Soic,
    #[serde(rename = "FOVEROS")]
    Foveros,
}

impl From<Ic2p5d> for IcName {
    fn from(ic: Ic2p5d) -> Self {
        match ic {
            Ic2p5d::Cowos => IcName::Cowos,
            Ic2p5d::Emib => IcName::Emib,
        }
    }
}

impl From<Ic3d> for IcName {
    fn from(ic: Ic3d) -> Self {
        match ic {
            Ic3d::Soic => IcName::Soic,
            Ic3d::Foveros => IcName::Foveros,
        }
    }
}

impl std::fmt::Display for IcName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            IcName::Cowos => "CoWoS",
            IcName::Emib => "EMIB",
            IcName::Soic => "SoIC",
            IcName::Foveros => "FOVEROS",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IcFamily {
    #[serde(rename = "2.5D")]
    TwoPointFiveD,
    #[serde(rename = "3D")]
    ThreeD,
}

/// Relative implementation cost class of an interconnect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostClass {
    Low,
    Medium,
    High,
    Highest,
}

/// Electrical and cost properties of one interconnect technology.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterconnectSpec {
    pub family: IcFamily,
    /// Energy per bit at the shortest trace, pJ/bit.
    pub e_bit_min_pj: f64,
    /// Energy per bit at the longest trace, pJ/bit.
    pub e_bit_max_pj: f64,
    /// Per-hop wire delay, ps.
    pub t_w_ps: f64,
    /// Admissible trace lengths in mm (2.5D families only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_range_mm: Option<(f64, f64)>,
    pub impl_cost_class: CostClass,
}

/// Router, contention, and serialization delays of the hop-latency model.
/// Contention defaults to zero; there is no traffic simulation in scope.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingParams {
    pub t_r_ps: f64,
    pub t_c_ps: f64,
    pub t_s_ps: f64,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams { t_r_ps: 100.0, t_c_ps: 0.0, t_s_ps: 0.0 }
    }
}

/// Regression coefficients of one package family's cost:
/// `mu0 * area + mu1 * links + mu2`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuCoeffs {
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackagingCostCoeffs {
    /// Per-footprint I/O pad bonding yield.
    pub assembly_bond_yield: f64,
    pub mu: BTreeMap<IcName, MuCoeffs>,
}

/// Weights and normalization scales of the scalar reward
/// `alpha * T/t_ref - beta * C/c_ref - gamma * E/e_ref`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Throughput normalization, ops/s.
    pub t_ref_ops: f64,
    /// Packaging-cost normalization, currency.
    pub c_ref: f64,
    /// Communication-energy normalization, pJ/op.
    pub e_ref_pj: f64,
}

/// Dataflow and utilization knobs of the analytical model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelKnobs {
    /// Operands fetched per MAC.
    pub n_operands: u32,
    /// Operand width, bits.
    pub data_width_bits: u32,
    /// Average reuses of an operand once on-chip; divides per-op traffic.
    pub reuse_factor: f64,
    /// Intra-chiplet PE utilization (mapping-dependent assumption).
    pub u_chip: f64,
    /// Reward assigned to infeasible design points (negated).
    pub infeasible_penalty: f64,
}

/// Reference monolithic system used for the comparison block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonolithicParams {
    /// Die area of the monolithic baseline, mm^2.
    pub area_mm2: f64,
    pub hbm_count: u32,
    /// Package link count charged to the monolithic package.
    pub package_links: u32,
    pub package_ic: IcName,
    /// Off-board links cost this many times the on-package reference energy.
    pub offboard_energy_factor: f64,
    /// On-package reference energy per bit, pJ.
    pub e_bit_onpkg_ref_pj: f64,
}

/// The complete calibration: everything [`crate::ppac::evaluate`] needs
/// besides the design point itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub tech_node: TechNode,
    pub package: PackageConstraints,
    pub interconnects: BTreeMap<IcName, InterconnectSpec>,
    pub timing: TimingParams,
    pub packaging_cost: PackagingCostCoeffs,
    pub reward: RewardWeights,
    pub model: ModelKnobs,
    pub monolithic: MonolithicParams,
}

impl Default for Calibration {
    fn default() -> Self {
        let mut interconnects = BTreeMap::new();
        interconnects.insert(
            IcName::Cowos,
            InterconnectSpec {
                family: IcFamily::TwoPointFiveD,
                e_bit_min_pj: 0.2,
                e_bit_max_pj: 0.5,
                t_w_ps: 17.2,
                trace_range_mm: Some((1.0, 10.0)),
                impl_cost_class: CostClass::Medium,
            },
        );
        interconnects.insert(
            IcName::Emib,
            InterconnectSpec {
                family: IcFamily::TwoPointFiveD,
                e_bit_min_pj: 0.17,
                e_bit_max_pj: 0.7,
                t_w_ps: 17.2,
                trace_range_mm: Some((1.0, 10.0)),
                impl_cost_class: CostClass::Low,
            },
        );
        interconnects.insert(
            IcName::Soic,
            InterconnectSpec {
                family: IcFamily::ThreeD,
                e_bit_min_pj: 0.1,
                e_bit_max_pj: 0.2,
                t_w_ps: 1.6,
                trace_range_mm: None,
                impl_cost_class: CostClass::High,
            },
        );
        interconnects.insert(
            IcName::Foveros,
            InterconnectSpec {
                family: IcFamily::ThreeD,
                e_bit_min_pj: 0.05,
                e_bit_max_pj: 0.05,
                t_w_ps: 1.6,
                trace_range_mm: None,
                impl_cost_class: CostClass::Highest,
            },
        );

        let mut mu = BTreeMap::new();
        mu.insert(IcName::Emib, MuCoeffs { mu0: 0.002, mu1: 0.0002, mu2: 0.5 });
        mu.insert(IcName::Cowos, MuCoeffs { mu0: 0.004, mu1: 0.0004, mu2: 1.0 });
        mu.insert(IcName::Soic, MuCoeffs { mu0: 0.002, mu1: 0.0001, mu2: 1.5 });
        mu.insert(IcName::Foveros, MuCoeffs { mu0: 0.003, mu1: 0.00015, mu2: 3.0 });

        Calibration {
            tech_node: TechNode {
                name: "7nm".to_string(),
                defect_density_per_cm2: 0.0975,
                cluster_alpha: 4.0,
                unit_price_per_mm2: 1.0,
                pe_area_mm2: 0.0045,
                e_mac_pj: 1.0,
                cycle_op: 1.0,
                clock_hz: 1.0e9,
            },
            package: PackageConstraints::default(),
            interconnects,
            timing: TimingParams::default(),
            packaging_cost: PackagingCostCoeffs { assembly_bond_yield: 0.99, mu },
            reward: RewardWeights {
                alpha: 1.0,
                beta: 1.0,
                gamma: 0.1,
                t_ref_ops: 5.0e11,
                c_ref: 1.0,
                e_ref_pj: 0.005,
            },
            model: ModelKnobs {
                n_operands: 2,
                data_width_bits: 8,
                reuse_factor: 8.0,
                u_chip: 0.85,
                infeasible_penalty: 1000.0,
            },
            monolithic: MonolithicParams {
                area_mm2: 826.0,
                hbm_count: 5,
                package_links: 5000,
                package_ic: IcName::Cowos,
                offboard_energy_factor: 10.0,
                e_bit_onpkg_ref_pj: 0.2,
            },
        }
    }
}

impl Calibration {
    pub fn from_json(json: &str) -> Result<Self, CalibError> {
        let calib: Calibration = serde_json::from_str(json)?;
        calib.validate().map_err(CalibError::Invalid)?;
        Ok(calib)
    }

    pub fn from_file(path: &Path) -> Result<Self, CalibError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn ic(&self, name: IcName) -> &InterconnectSpec {
        &self.interconnects[&name]
    }

    pub fn mu(&self, name: IcName) -> &MuCoeffs {
        &self.packaging_cost.mu[&name]
    }

    pub fn validate(&self) -> Result<(), String> {
        self.package.validate()?;
        let t = &self.tech_node;
        if t.defect_density_per_cm2 < 0.0 || t.cluster_alpha <= 0.0 || t.pe_area_mm2 <= 0.0 || t.clock_hz <= 0.0 {
            return Err("tech_node parameters out of range".to_string());
        }
        for name in [IcName::Cowos, IcName::Emib, IcName::Soic, IcName::Foveros] {
            let ic = self
                .interconnects
                .get(&name)
                .ok_or_else(|| format!("interconnect table is missing {name}"))?;
            if ic.e_bit_min_pj > ic.e_bit_max_pj {
                return Err(format!("{name}: e_bit_min exceeds e_bit_max"));
            }
            if matches!(ic.family, IcFamily::TwoPointFiveD) && ic.trace_range_mm.is_none() {
                return Err(format!("{name}: 2.5D interconnects need a trace range"));
            }
            if !self.packaging_cost.mu.contains_key(&name) {
                return Err(format!("packaging cost table is missing {name}"));
            }
        }
        let y = self.packaging_cost.assembly_bond_yield;
        if !(y > 0.0 && y <= 1.0) {
            return Err("assembly_bond_yield must be in (0, 1]".to_string());
        }
        let w = &self.reward;
        if w.t_ref_ops <= 0.0 || w.c_ref <= 0.0 || w.e_ref_pj <= 0.0 {
            return Err("reward normalization scales must be positive".to_string());
        }
        if !(self.model.u_chip > 0.0 && self.model.u_chip <= 1.0) {
            return Err("u_chip must be in (0, 1]".to_string());
        }
        if self.model.reuse_factor <= 0.0 {
            return Err("reuse_factor must be positive".to_string());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_calibration_is_valid() {
        Calibration::default().validate().unwrap();
    }

    #[test]
    fn wire_delays_match_the_packaging_table() {
        let c = Calibration::default();
        assert_eq!(c.ic(IcName::Emib).t_w_ps, 17.2);
        assert_eq!(c.ic(IcName::Cowos).t_w_ps, 17.2);
        assert_eq!(c.ic(IcName::Soic).t_w_ps, 1.6);
        assert_eq!(c.ic(IcName::Foveros).t_w_ps, 1.6);
    }

    #[test]
    fn json_round_trip_preserves_the_calibration() {
        let c = Calibration::default();
        let json = serde_json::to_string_pretty(&c).unwrap();
        let back = Calibration::from_json(&json).unwrap();
        assert_eq!(serde_json::to_value(&back).unwrap(), serde_json::to_value(&c).unwrap());
    }

    #[test]
    fn implementation_cost_classes_are_ordered() {
        let c = Calibration::default();
        assert!(c.ic(IcName::Emib).impl_cost_class < c.ic(IcName::Cowos).impl_cost_class);
        assert!(c.ic(IcName::Cowos).impl_cost_class < c.ic(IcName::Soic).impl_cost_class);
        assert!(c.ic(IcName::Soic).impl_cost_class < c.ic(IcName::Foveros).impl_cost_class);
    }
}
