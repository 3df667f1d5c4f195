//! Analytical PPAC model: die yield and cost, mesh hop counts and link
//! latency, per-chiplet and system throughput, bandwidth-limited utilization,
//! communication energy, packaging cost, and the scalar reward.
//!
//! [`evaluate`] composes everything into a [`PpacResult`] for one design
//! point. It is a pure function of its inputs: identical inputs give
//! bit-identical results, so it is safe to call from any number of optimizer
//! workers in parallel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calib::{Calibration, IcFamily, InterconnectSpec, MuCoeffs, PackagingCostCoeffs, TechNode, TimingParams};
use crate::design_space::{
    feasible, layout, ArchType, DesignPoint, HbmLoc, HbmSiteKind, MeshLayout, PackageConstraints,
};

#[derive(Debug, Error, PartialEq)]
pub enum PpacError {
    #[error("compute area {compute_area_mm2:.4} mm^2 fits no processing element (pe_area {pe_area_mm2} mm^2)")]
    ZeroPes { compute_area_mm2: f64, pe_area_mm2: f64 },
    #[error("trace length {trace_mm} mm outside [{lo}, {hi}] mm for {ic}")]
    TraceOutOfRange { ic: String, trace_mm: f64, lo: f64, hi: f64 },
}

/// Negative-binomial die yield: `(1 + d*A/alpha)^-alpha`, with the defect
/// density in defects/cm^2 and the area in mm^2.
pub fn die_yield(area_mm2: f64, tech: &TechNode) -> f64 {
    debug_assert!(area_mm2 > 0.0);
    let da = tech.defect_density_per_cm2 * area_mm2 / 100.0;
    (1.0 + da / tech.cluster_alpha).powf(-tech.cluster_alpha)
}

/// Price per yielded mm^2: `P0 / Y(A)`.
pub fn cost_per_yielded_area(area_mm2: f64, tech: &TechNode) -> f64 {
    tech.unit_price_per_mm2 / die_yield(area_mm2, tech)
}

/// Quadratic Taylor form of [`cost_per_yielded_area`]:
/// `P0 * (1 + dA + (alpha-1)/(2 alpha) * d^2 A^2)`. Secondary evaluator;
/// agrees with the exact form within 5% for dA/alpha <= 0.25.
pub fn cost_per_yielded_area_taylor(area_mm2: f64, tech: &TechNode) -> f64 {
    let da = tech.defect_density_per_cm2 * area_mm2 / 100.0;
    let a = tech.cluster_alpha;
    tech.unit_price_per_mm2 * (1.0 + da + (a - 1.0) / (2.0 * a) * da * da)
}

/// Worst-case AI-to-AI hop count on an m x n mesh: `m + n - 2`.
pub fn hops_ai_ai(lay: &MeshLayout) -> u32 {
    (lay.m + lay.n - 2) as u32
}

/// Worst-case HBM-to-AI hop count: the maximum over AI cells of the Manhattan
/// distance to the nearest HBM site. Side HBMs sit one hop outside their edge,
/// so the entry hop falls out of the coordinates; middle and stacked HBMs are
/// in-grid. Computed by explicit enumeration; there is no closed form.
pub fn hops_hbm_ai(lay: &MeshLayout) -> u32 {
    debug_assert!(!lay.hbm_sites.is_empty());
    let mut worst = 0u32;
    for i in 0..lay.m as i32 {
        for j in 0..lay.n as i32 {
            let nearest = lay
                .hbm_sites
                .iter()
                .map(|s| (i - s.row).unsigned_abs() + (j - s.col).unsigned_abs())
                .min()
                .unwrap_or(0);
            worst = worst.max(nearest);
        }
    }
    worst
}

/// Hop-count latency: `H*t_w + H*t_r + T_c + T_s`, in ps.
pub fn link_latency_ps(hops: u32, ic: &InterconnectSpec, tp: &TimingParams) -> f64 {
    hops as f64 * ic.t_w_ps + hops as f64 * tp.t_r_ps + tp.t_c_ps + tp.t_s_ps
}

/// Peak throughput of one AI chiplet in ops/s:
/// `f / (cycle_op + cycle_comm/rho) * PE_tot * u_chip`.
///
/// `PE_tot` is the PE count fitting in the compute share of the usable area
/// (total minus the TSV reserve on 2-tier stacks). The worst-case
/// communication latency is amortized over a reuse window `rho` of one
/// systolic-array edge; charging it on every MAC would let hop latency
/// dominate arbitrarily small workloads.
pub fn chiplet_peak_ops(
    area_per_chiplet_mm2: f64,
    two_tier: bool,
    pc: &PackageConstraints,
    tech: &TechNode,
    u_chip: f64,
    comm_latency_ps: f64,
) -> Result<f64, PpacError> {
    let usable = area_per_chiplet_mm2 - if two_tier { pc.tsv_reserve_mm2 } else { 0.0 };
    let compute_area = usable * pc.area_split.compute;
    let pe_tot = (compute_area / tech.pe_area_mm2).floor();
    if pe_tot < 1.0 {
        return Err(PpacError::ZeroPes { compute_area_mm2: compute_area, pe_area_mm2: tech.pe_area_mm2 });
    }
    let rho = pe_tot.sqrt().floor().max(1.0);
    let comm_cycles = comm_latency_ps * tech.clock_hz / 1e12;
    let cycles_per_op = tech.cycle_op + comm_cycles / rho;
    Ok(tech.clock_hz / cycles_per_op * pe_tot * u_chip)
}

/// Data source of a bandwidth requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BwSource {
    /// An HBM feeds up to 4 neighboring AI chiplets simultaneously.
    Hbm,
    /// An AI chiplet forwards to at most 1 neighbor.
    Ai,
}

impl BwSource {
    fn fanout(self) -> f64 {
        match self {
            BwSource::Hbm => 4.0,
            BwSource::Ai => 1.0,
        }
    }
}

/// Bandwidth needed to keep the fed chiplets stall-free, bits/s:
/// `fanout * N_o * d_w * peak`.
pub fn bw_req_bits_per_s(src: BwSource, peak_ops: f64, n_operands: u32, data_width_bits: u32) -> f64 {
    src.fanout() * n_operands as f64 * data_width_bits as f64 * peak_ops
}

/// Delivered bandwidth of one link class, bits/s: `DR * L`.
pub fn bw_act_bits_per_s(dr_gbps: u32, links: u32) -> f64 {
    dr_gbps as f64 * 1e9 * links as f64
}

/// Report a bit rate in Tbps using the 1024 Gbps/Tbps convention.
pub fn tbps(bits_per_s: f64) -> f64 {
    bits_per_s / 1e9 / 1024.0
}

/// Bandwidth-limited utilization: `min(1, BW_act / BW_req)`. Equivalent to
/// folding the ceil(BW_req/BW_act)-cycle operand stall into a multiplicative
/// throughput factor.
pub fn u_sys(bw_act: f64, bw_req: f64) -> f64 {
    debug_assert!(bw_req > 0.0);
    (bw_act / bw_req).min(1.0)
}

/// System throughput, ops/s: `peak * n_chiplets * u_sys`.
pub fn system_ops(peak_ops: f64, n_chiplets: u32, u_sys: f64) -> f64 {
    peak_ops * n_chiplets as f64 * u_sys
}

/// Per-bit link energy, pJ/bit. 2.5D families interpolate linearly in the
/// trace length over their admissible range; 3D families have no trace knob
/// and use the midpoint of their energy range.
pub fn e_comm_bit_pj(name: crate::calib::IcName, ic: &InterconnectSpec, trace_mm: f64) -> Result<f64, PpacError> {
    match ic.family {
        IcFamily::TwoPointFiveD => {
            let (lo, hi) = ic.trace_range_mm.expect("validated: 2.5D has a trace range");
            if trace_mm < lo || trace_mm > hi {
                return Err(PpacError::TraceOutOfRange { ic: name.to_string(), trace_mm, lo, hi });
            }
            let t = if hi > lo { (trace_mm - lo) / (hi - lo) } else { 0.0 };
            Ok(ic.e_bit_min_pj + t * (ic.e_bit_max_pj - ic.e_bit_min_pj))
        }
        IcFamily::ThreeD => Ok(0.5 * (ic.e_bit_min_pj + ic.e_bit_max_pj)),
    }
}

/// Energy of one operation, pJ: `e_comm_bit * bits_per_op + e_mac`.
pub fn energy_per_op_pj(e_comm_bit_pj: f64, bits_per_op: f64, tech: &TechNode) -> f64 {
    e_comm_bit_pj * bits_per_op + tech.e_mac_pj
}

/// Link classes present in a package.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkClass {
    AiAi2p5d,
    AiAi3d,
    HbmAi2p5d,
}

/// The active link classes of a design point, with their interconnect,
/// link count, and the package-area share charged to them.
fn active_classes(dp: &DesignPoint, lay: &MeshLayout, area_per_chiplet_mm2: f64, hbm_footprint_mm2: f64) -> Vec<(LinkClass, crate::calib::IcName, u32, f64)> {
    let mut classes = Vec::new();
    if lay.footprints >= 2 {
        classes.push((
            LinkClass::AiAi2p5d,
            dp.ic_2p5d_ai.into(),
            dp.links_2p5d_ai,
            lay.footprints as f64 * area_per_chiplet_mm2,
        ));
    }
    let stacked_hbms = lay.hbm_sites.iter().filter(|s| s.kind == HbmSiteKind::Stacked).count();
    match dp.arch_type {
        ArchType::LogicOnLogic if dp.n_chiplets >= 2 => {
            let top_dies = dp.n_chiplets as usize - lay.footprints;
            classes.push((LinkClass::AiAi3d, dp.ic_3d.into(), dp.links_3d, top_dies as f64 * area_per_chiplet_mm2));
        }
        ArchType::MemOnLogic if stacked_hbms > 0 => {
            classes.push((LinkClass::AiAi3d, dp.ic_3d.into(), dp.links_3d, stacked_hbms as f64 * hbm_footprint_mm2));
        }
        _ => {}
    }
    let hbm_2p5d = lay.hbm_sites.len() - stacked_hbms;
    if hbm_2p5d > 0 {
        classes.push((
            LinkClass::HbmAi2p5d,
            dp.ic_2p5d_hbm.into(),
            dp.links_2p5d_hbm,
            hbm_2p5d as f64 * hbm_footprint_mm2,
        ));
    }
    classes
}

/// Packaging cost: per active link class, `mu0 * area_share + mu1 * links +
/// mu2` with the class family's coefficients, summed and divided by the
/// assembly yield `bond_yield^footprints`.
pub fn packaging_cost(
    dp: &DesignPoint,
    lay: &MeshLayout,
    area_per_chiplet_mm2: f64,
    hbm_footprint_mm2: f64,
    coeffs: &PackagingCostCoeffs,
) -> f64 {
    let raw: f64 = active_classes(dp, lay, area_per_chiplet_mm2, hbm_footprint_mm2)
        .iter()
        .map(|(_, family, links, share)| {
            let MuCoeffs { mu0, mu1, mu2 } = coeffs.mu[family];
            mu0 * share + mu1 * *links as f64 + mu2
        })
        .sum();
    raw / coeffs.assembly_bond_yield.powi(lay.footprints as i32)
}

/// Required bandwidth per data source, bits/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BwReq {
    pub hbm_src: f64,
    pub ai_src: f64,
}

/// Delivered bandwidth per link class, bits/s. Inactive classes report 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BwAct {
    pub ai_ai_2p5d: f64,
    pub ai_ai_3d: f64,
    pub hbm_ai_2p5d: f64,
}

/// Full evaluation of one design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpacResult {
    pub feasible: bool,
    pub area_per_chiplet_mm2: f64,
    pub ops_per_sec_chiplet: f64,
    pub ops_per_sec_system: f64,
    pub u_sys: f64,
    pub u_chip: f64,
    pub l_ai_ai_ps: f64,
    pub l_hbm_ai_ps: f64,
    pub h_ai_ai: u32,
    pub h_hbm_ai: u32,
    pub bw_req_bits_per_s: BwReq,
    pub bw_act_bits_per_s: BwAct,
    pub e_op_pj: f64,
    pub e_comm_per_op_pj: f64,
    pub e_comm_bit_pj: f64,
    pub die_cost_total: f64,
    pub pkg_cost: f64,
    pub reward: f64,
}

impl PpacResult {
    /// Metrics-zeroed result carrying only the penalty reward.
    fn infeasible(area_per_chiplet_mm2: f64, penalty: f64) -> Self {
        PpacResult {
            feasible: false,
            area_per_chiplet_mm2,
            ops_per_sec_chiplet: 0.0,
            ops_per_sec_system: 0.0,
            u_sys: 0.0,
            u_chip: 0.0,
            l_ai_ai_ps: 0.0,
            l_hbm_ai_ps: 0.0,
            h_ai_ai: 0,
            h_hbm_ai: 0,
            bw_req_bits_per_s: BwReq::default(),
            bw_act_bits_per_s: BwAct::default(),
            e_op_pj: 0.0,
            e_comm_per_op_pj: 0.0,
            e_comm_bit_pj: 0.0,
            die_cost_total: 0.0,
            pkg_cost: 0.0,
            reward: -penalty,
        }
    }
}

/// The scalar reward: `alpha * T/t_ref - beta * C/c_ref - gamma * E/e_ref`,
/// with T the system throughput (ops/s), C the packaging cost, and E the
/// per-op communication energy (pJ).
pub fn scalar_reward(w: &crate::calib::RewardWeights, sys_ops: f64, pkg_cost: f64, e_comm_pj: f64) -> f64 {
    w.alpha * sys_ops / w.t_ref_ops - w.beta * pkg_cost / w.c_ref - w.gamma * e_comm_pj / w.e_ref_pj
}

/// Evaluate one design point against a calibration. Infeasible points (or
/// points whose dies fit no PE) return zeroed metrics and the penalty reward;
/// they are values, not errors, so optimizers can score them.
pub fn evaluate(dp: &DesignPoint, calib: &Calibration) -> PpacResult {
    let pc = &calib.package;
    let rep = feasible(dp, pc);
    if !rep.feasible {
        return PpacResult::infeasible(rep.area_per_chiplet_mm2, calib.model.infeasible_penalty);
    }
    let area = rep.area_per_chiplet_mm2;
    let lay = layout(dp);
    let two_tier = lay.tiers == 2;

    let h_ai = hops_ai_ai(&lay);
    let h_hbm = hops_hbm_ai(&lay);
    let l_ai = link_latency_ps(h_ai, calib.ic(dp.ic_2p5d_ai.into()), &calib.timing);
    let l_hbm = link_latency_ps(h_hbm, calib.ic(dp.ic_2p5d_hbm.into()), &calib.timing);

    let peak = match chiplet_peak_ops(area, two_tier, pc, &calib.tech_node, calib.model.u_chip, l_ai.max(l_hbm)) {
        Ok(p) => p,
        Err(_) => return PpacResult::infeasible(area, calib.model.infeasible_penalty),
    };

    let knobs = &calib.model;
    let bw_req = BwReq {
        hbm_src: bw_req_bits_per_s(BwSource::Hbm, peak, knobs.n_operands, knobs.data_width_bits),
        ai_src: bw_req_bits_per_s(BwSource::Ai, peak, knobs.n_operands, knobs.data_width_bits),
    };
    let classes = active_classes(dp, &lay, area, pc.hbm_footprint_mm2);
    let mut bw_act = BwAct::default();
    let mut u_ai = 1.0f64;
    let mut u_hbm = 1.0f64;
    let stacked_hbm = dp.arch_type == ArchType::MemOnLogic && dp.hbm_placement.contains(HbmLoc::Stacked);
    for (class, _, _, _) in &classes {
        match class {
            LinkClass::AiAi2p5d => {
                bw_act.ai_ai_2p5d = bw_act_bits_per_s(dp.dr_2p5d_ai, dp.links_2p5d_ai);
                u_ai = u_ai.min(u_sys(bw_act.ai_ai_2p5d, bw_req.ai_src));
            }
            LinkClass::AiAi3d => {
                bw_act.ai_ai_3d = bw_act_bits_per_s(dp.dr_3d, dp.links_3d);
                // Under mem-on-logic the 3D links feed from the stacked HBM;
                // under logic-on-logic they pair AI dies.
                if stacked_hbm {
                    u_hbm = u_hbm.min(u_sys(bw_act.ai_ai_3d, bw_req.hbm_src));
                } else {
                    u_ai = u_ai.min(u_sys(bw_act.ai_ai_3d, bw_req.ai_src));
                }
            }
            LinkClass::HbmAi2p5d => {
                bw_act.hbm_ai_2p5d = bw_act_bits_per_s(dp.dr_2p5d_hbm, dp.links_2p5d_hbm);
                u_hbm = u_hbm.min(u_sys(bw_act.hbm_ai_2p5d, bw_req.hbm_src));
            }
        }
    }
    let u = u_ai.min(u_hbm);
    let sys = system_ops(peak, dp.n_chiplets, u);

    // Traffic-averaged per-bit energy over the active link classes.
    let mut e_bits = Vec::with_capacity(classes.len());
    for (class, name, _, _) in &classes {
        let trace = match class {
            LinkClass::AiAi2p5d => dp.trace_2p5d_ai as f64,
            LinkClass::HbmAi2p5d => dp.trace_2p5d_hbm as f64,
            LinkClass::AiAi3d => 0.0,
        };
        let e = e_comm_bit_pj(*name, calib.ic(*name), trace).expect("decoded traces lie in the table range");
        e_bits.push(e);
    }
    let e_bit_eff = if e_bits.is_empty() { 0.0 } else { e_bits.iter().sum::<f64>() / e_bits.len() as f64 };
    let bits_per_op = knobs.n_operands as f64 * knobs.data_width_bits as f64 / knobs.reuse_factor;
    let e_comm = e_bit_eff * bits_per_op;
    let e_op = energy_per_op_pj(e_bit_eff, bits_per_op, &calib.tech_node);

    let die_cost_total =
        dp.n_chiplets as f64 * calib.tech_node.unit_price_per_mm2 * area / die_yield(area, &calib.tech_node);
    let pkg = packaging_cost(dp, &lay, area, pc.hbm_footprint_mm2, &calib.packaging_cost);
    let reward = scalar_reward(&calib.reward, sys, pkg, e_comm);

    PpacResult {
        feasible: true,
        area_per_chiplet_mm2: area,
        ops_per_sec_chiplet: peak,
        ops_per_sec_system: sys,
        u_sys: u,
        u_chip: knobs.u_chip,
        l_ai_ai_ps: l_ai,
        l_hbm_ai_ps: l_hbm,
        h_ai_ai: h_ai,
        h_hbm_ai: h_hbm,
        bw_req_bits_per_s: bw_req,
        bw_act_bits_per_s: bw_act,
        e_op_pj: e_op,
        e_comm_per_op_pj: e_comm,
        e_comm_bit_pj: e_bit_eff,
        die_cost_total,
        pkg_cost: pkg,
        reward,
    }
}

/// Monolithic single-die baseline at iso-area: same peak-throughput model on
/// one die with no inter-chiplet terms; its communication energy is charged
/// at the off-board rate since matching the chiplet system's throughput
/// requires linking dies over the board.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonolithicBaseline {
    pub area_mm2: f64,
    pub yield_fraction: f64,
    /// Cost of one yielded die.
    pub die_cost: f64,
    pub ops_per_sec: f64,
    pub e_op_pj: f64,
    pub pkg_cost: f64,
}

pub fn monolithic_baseline(area_mm2: f64, calib: &Calibration) -> MonolithicBaseline {
    let tech = &calib.tech_node;
    let pc = &calib.package;
    let y = die_yield(area_mm2, tech);
    let die_cost = tech.unit_price_per_mm2 * area_mm2 / y;
    let ops = chiplet_peak_ops(area_mm2, false, pc, tech, calib.model.u_chip, 0.0).map_or(0.0, |v| v);
    let mono = &calib.monolithic;
    let bits_per_op = calib.model.n_operands as f64 * calib.model.data_width_bits as f64 / calib.model.reuse_factor;
    let e_bit_offboard = mono.offboard_energy_factor * mono.e_bit_onpkg_ref_pj;
    let e_op = energy_per_op_pj(e_bit_offboard, bits_per_op, tech);
    let mu = calib.mu(mono.package_ic);
    let pkg_area = area_mm2 + mono.hbm_count as f64 * pc.hbm_footprint_mm2;
    let pkg_cost =
        (mu.mu0 * pkg_area + mu.mu1 * mono.package_links as f64 + mu.mu2) / calib.packaging_cost.assembly_bond_yield;
    MonolithicBaseline { area_mm2, yield_fraction: y, die_cost, ops_per_sec: ops, e_op_pj: e_op, pkg_cost }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::IcName;
    use crate::design_space::DesignSpace;
    use approx::assert_relative_eq;

    fn calib() -> Calibration {
        Calibration::default()
    }

    fn ref60_point() -> DesignPoint {
        DesignSpace::table_default()
            .decode(&[2, 59, 29, 1, 19, 61, 0, 0, 22, 31, 1, 19, 97, 0])
            .unwrap()
    }

    #[test]
    fn die_yield_examples() {
        let mut tech = calib().tech_node;
        tech.defect_density_per_cm2 = 0.0;
        assert_eq!(die_yield(400.0, &tech), 1.0);

        tech.defect_density_per_cm2 = 0.09;
        assert_relative_eq!(die_yield(400.0, &tech), 0.708_425_211_065_196_4, max_relative = 1e-12);

        tech.defect_density_per_cm2 = 0.0975;
        assert_relative_eq!(die_yield(826.0, &tech), 0.480_109_019_091_342_2, max_relative = 1e-12);
        assert_relative_eq!(die_yield(26.0, &tech), 0.975_046_604_180_150_5, max_relative = 1e-12);
        assert_relative_eq!(die_yield(14.0, &tech), 0.986_465_661_501_141, max_relative = 1e-12);
    }

    #[test]
    fn die_yield_is_monotone_in_area_and_defect_density() {
        let tech = calib().tech_node;
        let mut prev = 1.0;
        for a in 1..200 {
            let y = die_yield(a as f64 * 5.0, &tech);
            assert!(y < prev && y > 0.0 && y <= 1.0);
            prev = y;
        }
        let mut tech_d = tech.clone();
        let base = die_yield(100.0, &tech_d);
        tech_d.defect_density_per_cm2 *= 2.0;
        assert!(die_yield(100.0, &tech_d) < base);
    }

    #[test]
    fn cost_per_yielded_area_examples() {
        let mut tech = calib().tech_node;
        tech.defect_density_per_cm2 = 0.0;
        assert_eq!(cost_per_yielded_area(123.0, &tech), 1.0);

        tech.defect_density_per_cm2 = 0.0975;
        assert_relative_eq!(cost_per_yielded_area(826.0, &tech), 2.082_860_267_637_977_7, max_relative = 1e-12);

        // First-order Taylor at small dA.
        let tiny = cost_per_yielded_area_taylor(1.0, &tech);
        let da = 0.0975 / 100.0;
        assert_relative_eq!(tiny, 1.0 + da, max_relative = 1e-6);

        // The quadratic form tracks the exact form within 5% up to dA/alpha = 0.25.
        let a_edge = 0.25 * 4.0 / 0.0975 * 100.0;
        for frac in [0.1, 0.5, 1.0] {
            let a = a_edge * frac;
            let exact = cost_per_yielded_area(a, &tech);
            let taylor = cost_per_yielded_area_taylor(a, &tech);
            assert!((taylor - exact).abs() / exact < 0.05, "area {a}");
        }
    }

    #[test]
    fn hop_formula_examples() {
        let lay = |m: usize, n: usize| MeshLayout { m, n, footprints: m * n, tiers: 1, hbm_sites: vec![] };
        assert_eq!(hops_ai_ai(&lay(5, 6)), 9);
        assert_eq!(hops_ai_ai(&lay(1, 1)), 0);
    }

    #[test]
    fn link_latency_examples() {
        let c = calib();
        let tp = TimingParams { t_r_ps: 100.0, t_c_ps: 0.0, t_s_ps: 0.0 };
        assert_relative_eq!(link_latency_ps(9, c.ic(IcName::Emib), &tp), 1054.8, max_relative = 1e-12);

        let tcs = TimingParams { t_r_ps: 100.0, t_c_ps: 3.0, t_s_ps: 4.0 };
        assert_eq!(link_latency_ps(0, c.ic(IcName::Emib), &tcs), 7.0);

        // 3D vs 2.5D wire-delay ratio at zero router delay.
        let bare = TimingParams { t_r_ps: 0.0, t_c_ps: 0.0, t_s_ps: 0.0 };
        let r = link_latency_ps(1, c.ic(IcName::Soic), &bare) / link_latency_ps(1, c.ic(IcName::Emib), &bare);
        assert_relative_eq!(r, 1.6 / 17.2, max_relative = 1e-12);
    }

    #[test]
    fn chiplet_peak_ops_examples() {
        let mut c = calib();
        c.tech_node.pe_area_mm2 = 0.0005;
        c.tech_node.clock_hz = 1e9;
        c.tech_node.cycle_op = 1.0;
        // 1024 PEs exactly: compute area = 0.4 * 1.28 mm^2.
        let area = 1024.0 * 0.0005 / 0.4;
        let ops = chiplet_peak_ops(area, false, &c.package, &c.tech_node, 1.0, 0.0).unwrap();
        assert_relative_eq!(ops, 1.024e12, max_relative = 1e-12);

        assert_eq!(chiplet_peak_ops(area, false, &c.package, &c.tech_node, 0.0, 0.0).unwrap(), 0.0);

        // Doubling pe_area halves the PE count (up to flooring).
        let mut doubled = c.tech_node.clone();
        doubled.pe_area_mm2 *= 2.0;
        let ops2 = chiplet_peak_ops(area, false, &c.package, &doubled, 1.0, 0.0).unwrap();
        assert_relative_eq!(ops2, ops / 2.0, max_relative = 1e-9);

        assert!(matches!(
            chiplet_peak_ops(0.001, false, &c.package, &c.tech_node, 1.0, 0.0),
            Err(PpacError::ZeroPes { .. })
        ));
    }

    #[test]
    fn bw_req_examples() {
        assert_relative_eq!(bw_req_bits_per_s(BwSource::Ai, 1e12, 2, 8), 16e12, max_relative = 1e-12);
        assert_relative_eq!(
            bw_req_bits_per_s(BwSource::Hbm, 1e12, 2, 8),
            4.0 * bw_req_bits_per_s(BwSource::Ai, 1e12, 2, 8),
            max_relative = 1e-12
        );
        assert_eq!(bw_req_bits_per_s(BwSource::Ai, 0.0, 2, 8), 0.0);
    }

    #[test]
    fn bw_act_examples() {
        assert_relative_eq!(tbps(bw_act_bits_per_s(42, 3200)), 131.25, max_relative = 1e-12);
        assert_relative_eq!(tbps(bw_act_bits_per_s(20, 4900)), 95.703125, max_relative = 1e-12);
        assert_eq!(bw_act_bits_per_s(1, 1), 1e9);
    }

    #[test]
    fn u_sys_examples() {
        assert_eq!(u_sys(8.0, 8.0), 1.0);
        assert_eq!(u_sys(16.0, 8.0), 1.0);
        assert_eq!(u_sys(2.0, 8.0), 0.25);
    }

    #[test]
    fn e_comm_bit_examples() {
        let c = calib();
        let emib = c.ic(IcName::Emib);
        assert_relative_eq!(e_comm_bit_pj(IcName::Emib, emib, 1.0).unwrap(), 0.17, max_relative = 1e-12);
        assert_relative_eq!(e_comm_bit_pj(IcName::Emib, emib, 10.0).unwrap(), 0.7, max_relative = 1e-12);
        assert_relative_eq!(e_comm_bit_pj(IcName::Emib, emib, 5.5).unwrap(), 0.435, max_relative = 1e-12);
        assert!(matches!(
            e_comm_bit_pj(IcName::Emib, emib, 11.0),
            Err(PpacError::TraceOutOfRange { .. })
        ));
        assert_relative_eq!(e_comm_bit_pj(IcName::Soic, c.ic(IcName::Soic), 0.0).unwrap(), 0.15, max_relative = 1e-12);
        assert_relative_eq!(
            e_comm_bit_pj(IcName::Foveros, c.ic(IcName::Foveros), 0.0).unwrap(),
            0.05,
            max_relative = 1e-12
        );
    }

    #[test]
    fn energy_per_op_examples() {
        let tech = calib().tech_node;
        assert_eq!(energy_per_op_pj(0.5, 0.0, &tech), tech.e_mac_pj);
        let mut t = tech.clone();
        t.e_mac_pj = 1.0;
        assert_relative_eq!(energy_per_op_pj(0.2, 16.0, &t), 4.2, max_relative = 1e-12);
        assert_relative_eq!(energy_per_op_pj(0.2, 16.0 / 16.0, &t), 1.2, max_relative = 1e-12);
    }

    #[test]
    fn packaging_cost_examples() {
        let space = DesignSpace::table_default();
        // One chiplet, one side HBM, 100 HBM links: only the HBM class is active.
        let mut a = [0usize; 14];
        a[12] = 1; // links_2p5d_hbm = 100
        let dp = space.decode(&a).unwrap();
        let lay = layout(&dp);
        let mut coeffs = calib().packaging_cost;
        coeffs.assembly_bond_yield = 1.0;
        for m in coeffs.mu.values_mut() {
            *m = MuCoeffs { mu0: 0.0, mu1: 1.0, mu2: 0.0 };
        }
        assert_relative_eq!(packaging_cost(&dp, &lay, 100.0, 26.0, &coeffs), 100.0, max_relative = 1e-12);

        // 99% bonding over 30 footprints scales cost by 1/0.99^30.
        let dp = ref60_point();
        let lay = layout(&dp);
        let area = 26.1;
        let mut perfect = calib().packaging_cost;
        perfect.assembly_bond_yield = 1.0;
        let real = calib().packaging_cost;
        let ratio = packaging_cost(&dp, &lay, area, 26.0, &real) / packaging_cost(&dp, &lay, area, 26.0, &perfect);
        assert_relative_eq!(ratio, 1.0 / 0.99f64.powi(30), max_relative = 1e-12);

        // mu2 defaults follow the implementation-cost classes.
        let c = calib();
        assert!(c.mu(IcName::Foveros).mu2 > c.mu(IcName::Soic).mu2);
        assert!(c.mu(IcName::Soic).mu2 > c.mu(IcName::Cowos).mu2);
        assert!(c.mu(IcName::Cowos).mu2 > c.mu(IcName::Emib).mu2);
    }

    #[test]
    fn scalar_reward_example() {
        let w = crate::calib::RewardWeights {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.1,
            t_ref_ops: 1.0,
            c_ref: 1.0,
            e_ref_pj: 1.0,
        };
        assert_relative_eq!(scalar_reward(&w, 200.0, 10.0, 100.0), 180.0, max_relative = 1e-12);
    }

    #[test]
    fn evaluate_ref60_matches_the_closed_form_pipeline() {
        let c = calib();
        let res = evaluate(&ref60_point(), &c);
        assert!(res.feasible);
        assert_relative_eq!(res.area_per_chiplet_mm2, 26.1, max_relative = 1e-12);
        assert_eq!(res.h_ai_ai, 9);
        assert_eq!(res.h_hbm_ai, 4);
        assert_relative_eq!(res.l_ai_ai_ps, 1054.8, max_relative = 1e-12);
        // Hand-traced with the default calibration: 2142 PEs, reuse window 46.
        assert_relative_eq!(res.ops_per_sec_chiplet, 1_779_886_430_289.789_8, max_relative = 1e-9);
        assert_relative_eq!(res.u_sys, 0.860_307_699_379_837_2, max_relative = 1e-9);
        assert_relative_eq!(res.ops_per_sec_system, 9.1875e13, max_relative = 1e-9);
        assert_relative_eq!(res.e_comm_bit_pj, (0.17 + 0.15 + 0.17) / 3.0, max_relative = 1e-12);
        assert_relative_eq!(res.pkg_cost, 10.490_734_193_433_555, max_relative = 1e-9);
        assert_relative_eq!(res.reward, 166.725_932_473_233_12, max_relative = 1e-9);
    }

    #[test]
    fn evaluate_flags_infeasible_points_with_the_penalty() {
        let c = calib();
        let space = DesignSpace::table_default();
        let mut a = [0usize; 14];
        a[2] = 31; // stacked HBM under a 2.5D arch
        let res = evaluate(&space.decode(&a).unwrap(), &c);
        assert!(!res.feasible);
        assert_eq!(res.reward, -1000.0);
        assert_eq!(res.ops_per_sec_system, 0.0);
        assert_eq!(res.pkg_cost, 0.0);
    }

    #[test]
    fn evaluate_is_deterministic() {
        let c = calib();
        let dp = ref60_point();
        let first = evaluate(&dp, &c);
        for _ in 0..1000 {
            assert_eq!(evaluate(&dp, &c), first);
        }
    }

    #[test]
    fn reward_is_strictly_decreasing_in_cost_and_energy() {
        let w = calib().reward;
        let base = scalar_reward(&w, 1e13, 10.0, 0.4);
        assert!(scalar_reward(&w, 1e13, 11.0, 0.4) < base);
        assert!(scalar_reward(&w, 1e13, 10.0, 0.5) < base);
    }

    #[test]
    fn reward_ranking_is_invariant_to_common_weight_scaling() {
        let mut w = calib().reward;
        let a = (1.2e13, 9.0, 0.3);
        let b = (1.1e13, 5.0, 0.5);
        let before = scalar_reward(&w, a.0, a.1, a.2) > scalar_reward(&w, b.0, b.1, b.2);
        w.alpha *= 7.5;
        w.beta *= 7.5;
        w.gamma *= 7.5;
        let after = scalar_reward(&w, a.0, a.1, a.2) > scalar_reward(&w, b.0, b.1, b.2);
        assert_eq!(before, after);
    }

    #[test]
    fn system_ops_is_monotone_in_links_and_data_rate() {
        let c = calib();
        let space = DesignSpace::table_default();
        // Start from a bandwidth-starved variant of the reference design.
        let mut action = vec![2usize, 59, 29, 1, 19, 61, 0, 0, 22, 31, 1, 19, 20, 0];
        let mut prev = 0.0;
        for links_idx in (20..100).step_by(10) {
            action[12] = links_idx;
            let ops = evaluate(&space.decode(&action).unwrap(), &c).ops_per_sec_system;
            assert!(ops >= prev, "links idx {links_idx}: {ops} < {prev}");
            prev = ops;
        }
        action[12] = 40;
        prev = 0.0;
        for dr_idx in 0..20 {
            action[11] = dr_idx;
            let ops = evaluate(&space.decode(&action).unwrap(), &c).ops_per_sec_system;
            assert!(ops >= prev, "dr idx {dr_idx}: {ops} < {prev}");
            prev = ops;
        }
    }

    #[test]
    fn system_ops_favors_the_larger_reference_config() {
        let c = calib();
        let space = DesignSpace::table_default();
        let ref112 = space.decode(&[2, 111, 26, 1, 19, 28, 0, 1, 14, 43, 1, 19, 76, 0]).unwrap();
        assert_eq!(ref112.n_chiplets, 112);
        let r1 = evaluate(&ref60_point(), &c);
        let r2 = evaluate(&ref112, &c);
        assert!(r2.ops_per_sec_system > r1.ops_per_sec_system);
    }

    #[test]
    fn monolithic_baseline_examples() {
        let c = calib();
        let mono = monolithic_baseline(826.0, &c);
        assert_relative_eq!(mono.yield_fraction, 0.480_109_019_091_342_2, max_relative = 1e-12);
        assert_relative_eq!(mono.die_cost, 826.0 / 0.480_109_019_091_342_2, max_relative = 1e-12);

        // Per-die cost ratio vs one 26.1 mm^2 chiplet die.
        let chip_die = 26.1 / die_yield(26.1, &c.tech_node);
        let ratio = mono.die_cost / chip_die;
        assert!((50.0..150.0).contains(&ratio), "ratio {ratio}");

        // Yield tends to 1 as area tends to 0.
        assert!(monolithic_baseline(1e-6, &c).yield_fraction > 0.999_999);
    }
}
