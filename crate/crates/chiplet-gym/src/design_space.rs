//! The 14-parameter design space: parameter table, action-vector decoding,
//! physical mesh layout, and package-level feasibility.
//!
//! Optimizers see the space as a vector of 14 categorical heads; [`DesignSpace::decode`]
//! maps an index vector to a typed [`DesignPoint`]. The space can be restricted
//! (parameters pinned to a single value) for exhaustive-search oracles, and the
//! chiplet-count cardinality can be capped at 64 or 128.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of design parameters.
pub const N_PARAMS: usize = 14;

/// Parameter names, in table order. These are also the JSON keys of a
/// serialized [`DesignPoint`].
pub const PARAM_NAMES: [&str; N_PARAMS] = [
    "arch_type",
    "n_chiplets",
    "hbm_placement",
    "ic_2p5d_ai",
    "dr_2p5d_ai",
    "links_2p5d_ai",
    "trace_2p5d_ai",
    "ic_3d",
    "dr_3d",
    "links_3d",
    "ic_2p5d_hbm",
    "dr_2p5d_hbm",
    "links_2p5d_hbm",
    "trace_2p5d_hbm",
];

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("action vector has {got} entries, expected {expected}")]
    ArityMismatch { got: usize, expected: usize },
    #[error("index {index} out of range for parameter `{param}` (cardinality {cardinality})")]
    IndexOutOfRange {
        param: &'static str,
        index: usize,
        cardinality: usize,
    },
    #[error("value {value} is not admissible for parameter `{param}`")]
    ValueNotInSpace { param: String, value: i64 },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
}

/// Packaging architecture of the whole system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArchType {
    /// All chiplets side by side on a 2.5D substrate.
    #[serde(rename = "2.5D")]
    TwoPointFiveD,
    /// HBM stacked on logic; AI chiplets remain single-tier.
    #[serde(rename = "5.5D-mem-on-logic")]
    MemOnLogic,
    /// AI chiplets stacked in pairs; pairs meshed in 2.5D.
    #[serde(rename = "5.5D-logic-on-logic")]
    LogicOnLogic,
}

impl ArchType {
    pub fn index(self) -> usize {
        match self {
            ArchType::TwoPointFiveD => 0,
            ArchType::MemOnLogic => 1,
            ArchType::LogicOnLogic => 2,
        }
    }
}

/// 2.5D interconnect options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ic2p5d {
    #[serde(rename = "CoWoS")]
    Cowos,
    #[serde(rename = "EMIB")]
    Emib,
}

/// 3D interconnect options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ic3d {
    #[serde(rename = "SoIC")]
    Soic,
    #[serde(rename = "FOVEROS")]
    Foveros,
}

/// One of the six admissible HBM locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HbmLoc {
    Left,
    Right,
    Top,
    Bottom,
    Middle,
    Stacked,
}

impl HbmLoc {
    pub const ALL: [HbmLoc; 6] = [
        HbmLoc::Left,
        HbmLoc::Right,
        HbmLoc::Top,
        HbmLoc::Bottom,
        HbmLoc::Middle,
        HbmLoc::Stacked,
    ];

    fn bit(self) -> u8 {
        match self {
            HbmLoc::Left => 1 << 0,
            HbmLoc::Right => 1 << 1,
            HbmLoc::Top => 1 << 2,
            HbmLoc::Bottom => 1 << 3,
            HbmLoc::Middle => 1 << 4,
            HbmLoc::Stacked => 1 << 5,
        }
    }
}

/// Nonempty subset of the six HBM locations, encoded as codes 1..=63.
/// One HBM chiplet sits at each selected location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<HbmLoc>", into = "Vec<HbmLoc>")]
pub struct HbmPlacement(u8);

impl HbmPlacement {
    pub fn from_code(code: u8) -> Option<Self> {
        (1..=63).contains(&code).then_some(HbmPlacement(code))
    }

    pub fn from_locs(locs: &[HbmLoc]) -> Option<Self> {
        let mut code = 0u8;
        for loc in locs {
            code |= loc.bit();
        }
        Self::from_code(code)
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn contains(self, loc: HbmLoc) -> bool {
        self.0 & loc.bit() != 0
    }

    /// Number of HBM chiplets (one per selected location).
    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn locs(self) -> Vec<HbmLoc> {
        HbmLoc::ALL.iter().copied().filter(|l| self.contains(*l)).collect()
    }
}

impl From<HbmPlacement> for Vec<HbmLoc> {
    fn from(p: HbmPlacement) -> Self {
        p.locs()
    }
}

impl TryFrom<Vec<HbmLoc>> for HbmPlacement {
    type Error = String;

    fn try_from(locs: Vec<HbmLoc>) -> Result<Self, String> {
        HbmPlacement::from_locs(&locs).ok_or_else(|| "hbm_placement must be a nonempty set of locations".to_string())
    }
}

/// One full assignment of the 14 design parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignPoint {
    pub arch_type: ArchType,
    pub n_chiplets: u32,
    pub hbm_placement: HbmPlacement,
    pub ic_2p5d_ai: Ic2p5d,
    /// Gbps per link, AI-AI 2.5D.
    pub dr_2p5d_ai: u32,
    pub links_2p5d_ai: u32,
    /// Trace length in mm, AI-AI 2.5D.
    pub trace_2p5d_ai: u32,
    pub ic_3d: Ic3d,
    /// Gbps per link, 3D.
    pub dr_3d: u32,
    pub links_3d: u32,
    pub ic_2p5d_hbm: Ic2p5d,
    /// Gbps per link, AI-HBM 2.5D.
    pub dr_2p5d_hbm: u32,
    pub links_2p5d_hbm: u32,
    /// Trace length in mm, AI-HBM 2.5D.
    pub trace_2p5d_hbm: u32,
}

impl DesignPoint {
    /// Number of stacked tiers: 2 only for logic-on-logic.
    pub fn tiers(&self) -> usize {
        if self.arch_type == ArchType::LogicOnLogic {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Categorical,
    IntegerRange,
}

/// One parameter's admissible values, in decode order. Categorical parameters
/// store enum discriminants; range parameters store the values themselves.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub values: Vec<i64>,
}

impl ParamSpec {
    pub fn cardinality(&self) -> usize {
        self.values.len()
    }
}

fn range_values(lo: i64, hi: i64, step: i64) -> Vec<i64> {
    (lo..=hi).step_by(step as usize).collect()
}

/// The complete design space: 14 ordered [`ParamSpec`]s.
#[derive(Debug, Clone)]
pub struct DesignSpace {
    params: Vec<ParamSpec>,
}

impl DesignSpace {
    /// Full design space with the chiplet count capped at `n_chiplets_max`
    /// (64 or 128 in the two studied cases).
    pub fn with_chiplet_cap(n_chiplets_max: u32) -> Self {
        use ParamKind::{Categorical, IntegerRange};
        let params = vec![
            ParamSpec { name: PARAM_NAMES[0], kind: Categorical, values: vec![0, 1, 2] },
            ParamSpec { name: PARAM_NAMES[1], kind: IntegerRange, values: range_values(1, n_chiplets_max as i64, 1) },
            ParamSpec { name: PARAM_NAMES[2], kind: IntegerRange, values: range_values(1, 63, 1) },
            ParamSpec { name: PARAM_NAMES[3], kind: Categorical, values: vec![0, 1] },
            ParamSpec { name: PARAM_NAMES[4], kind: IntegerRange, values: range_values(1, 20, 1) },
            ParamSpec { name: PARAM_NAMES[5], kind: IntegerRange, values: range_values(50, 5000, 50) },
            ParamSpec { name: PARAM_NAMES[6], kind: IntegerRange, values: range_values(1, 10, 1) },
            ParamSpec { name: PARAM_NAMES[7], kind: Categorical, values: vec![0, 1] },
            ParamSpec { name: PARAM_NAMES[8], kind: IntegerRange, values: range_values(20, 50, 1) },
            ParamSpec { name: PARAM_NAMES[9], kind: IntegerRange, values: range_values(100, 10_000, 100) },
            ParamSpec { name: PARAM_NAMES[10], kind: Categorical, values: vec![0, 1] },
            ParamSpec { name: PARAM_NAMES[11], kind: IntegerRange, values: range_values(1, 20, 1) },
            ParamSpec { name: PARAM_NAMES[12], kind: IntegerRange, values: range_values(50, 5000, 50) },
            ParamSpec { name: PARAM_NAMES[13], kind: IntegerRange, values: range_values(1, 10, 1) },
        ];
        debug_assert!(params.iter().all(|p| p.cardinality() >= 2));
        DesignSpace { params }
    }

    /// Full table with the 128-chiplet upper bound.
    pub fn table_default() -> Self {
        Self::with_chiplet_cap(128)
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    /// Per-parameter category counts, in table order.
    pub fn cardinalities(&self) -> Vec<usize> {
        self.params.iter().map(ParamSpec::cardinality).collect()
    }

    /// Total number of design points (as f64; the full space overflows u64 budgets
    /// for counting loops but not the float).
    pub fn total_points(&self) -> f64 {
        self.params.iter().map(|p| p.cardinality() as f64).product()
    }

    /// Restrict one parameter to a single admissible value, by name.
    pub fn pin(&self, name: &str, value: i64) -> Result<Self, SpaceError> {
        let idx = PARAM_NAMES
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| SpaceError::UnknownParam(name.to_string()))?;
        let mut params = self.params.clone();
        if !params[idx].values.contains(&value) {
            return Err(SpaceError::ValueNotInSpace { param: name.to_string(), value });
        }
        params[idx].values = vec![value];
        Ok(DesignSpace { params })
    }

    /// Decode an index vector into a design point. Bijective with [`Self::encode`].
    pub fn decode(&self, action: &[usize]) -> Result<DesignPoint, SpaceError> {
        if action.len() != N_PARAMS {
            return Err(SpaceError::ArityMismatch { got: action.len(), expected: N_PARAMS });
        }
        let mut v = [0i64; N_PARAMS];
        for (i, (spec, &idx)) in self.params.iter().zip(action).enumerate() {
            if idx >= spec.cardinality() {
                return Err(SpaceError::IndexOutOfRange {
                    param: spec.name,
                    index: idx,
                    cardinality: spec.cardinality(),
                });
            }
            v[i] = spec.values[idx];
        }
        Ok(DesignPoint {
            arch_type: match v[0] {
                0 => ArchType::TwoPointFiveD,
                1 => ArchType::MemOnLogic,
                _ => ArchType::LogicOnLogic,
            },
            n_chiplets: v[1] as u32,
            hbm_placement: HbmPlacement::from_code(v[2] as u8).expect("codes 1..=63 by construction"),
            ic_2p5d_ai: if v[3] == 0 { Ic2p5d::Cowos } else { Ic2p5d::Emib },
            dr_2p5d_ai: v[4] as u32,
            links_2p5d_ai: v[5] as u32,
            trace_2p5d_ai: v[6] as u32,
            ic_3d: if v[7] == 0 { Ic3d::Soic } else { Ic3d::Foveros },
            dr_3d: v[8] as u32,
            links_3d: v[9] as u32,
            ic_2p5d_hbm: if v[10] == 0 { Ic2p5d::Cowos } else { Ic2p5d::Emib },
            dr_2p5d_hbm: v[11] as u32,
            links_2p5d_hbm: v[12] as u32,
            trace_2p5d_hbm: v[13] as u32,
        })
    }

    /// Encode a design point back to its index vector.
    pub fn encode(&self, dp: &DesignPoint) -> Result<Vec<usize>, SpaceError> {
        let raw: [i64; N_PARAMS] = [
            dp.arch_type.index() as i64,
            dp.n_chiplets as i64,
            dp.hbm_placement.code() as i64,
            (dp.ic_2p5d_ai == Ic2p5d::Emib) as i64,
            dp.dr_2p5d_ai as i64,
            dp.links_2p5d_ai as i64,
            dp.trace_2p5d_ai as i64,
            (dp.ic_3d == Ic3d::Foveros) as i64,
            dp.dr_3d as i64,
            dp.links_3d as i64,
            (dp.ic_2p5d_hbm == Ic2p5d::Emib) as i64,
            dp.dr_2p5d_hbm as i64,
            dp.links_2p5d_hbm as i64,
            dp.trace_2p5d_hbm as i64,
        ];
        let mut action = Vec::with_capacity(N_PARAMS);
        for (spec, value) in self.params.iter().zip(raw) {
            let idx = spec
                .values
                .iter()
                .position(|&v| v == value)
                .ok_or_else(|| SpaceError::ValueNotInSpace { param: spec.name.to_string(), value })?;
            action.push(idx);
        }
        Ok(action)
    }

    /// Uniform random action vector.
    pub fn sample(&self, rng: &mut impl rand::Rng) -> Vec<usize> {
        self.params.iter().map(|p| rng.gen_range(0..p.cardinality())).collect()
    }
}

/// Where an HBM chiplet attaches relative to the AI mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HbmSiteKind {
    /// Beside the mesh, linked in 2.5D; sits one hop outside an edge midpoint.
    Side,
    /// Over the center mesh cell, linked in 2.5D.
    Middle,
    /// 3D-stacked over the corner cell (mem-on-logic only).
    Stacked,
}

/// Grid coordinate of one HBM chiplet. Side sites use a row or column of -1
/// (or m / n) to sit one hop outside the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HbmSite {
    pub kind: HbmSiteKind,
    pub row: i32,
    pub col: i32,
}

/// Physical footprint grid of the AI chiplets plus HBM attachment positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshLayout {
    /// Mesh rows (m <= n).
    pub m: usize,
    /// Mesh columns.
    pub n: usize,
    /// Occupied 2D grid sites; equals `m * n`.
    pub footprints: usize,
    /// 1, or 2 for logic-on-logic.
    pub tiers: usize,
    pub hbm_sites: Vec<HbmSite>,
}

/// Factor pair (m, n) of `footprints` with m <= n and |m - n| minimal.
fn mesh_dims(footprints: usize) -> (usize, usize) {
    let mut d = (footprints as f64).sqrt().floor() as usize;
    while d > 1 && footprints % d != 0 {
        d -= 1;
    }
    (d.max(1), footprints / d.max(1))
}

/// Derive the mesh layout of a design point.
///
/// Logic-on-logic stacks chiplets in pairs, so it occupies ceil(n/2)
/// footprints; an odd count leaves one single-die site. Side HBMs attach one
/// hop outside the midpoint cell of their edge, `middle` occupies the center
/// cell, and `stacked` sits over cell (0, 0).
pub fn layout(dp: &DesignPoint) -> MeshLayout {
    let tiers = dp.tiers();
    let footprints = if tiers == 2 {
        (dp.n_chiplets as usize).div_ceil(2)
    } else {
        dp.n_chiplets as usize
    };
    let (m, n) = mesh_dims(footprints);
    let (mi, ni) = (m as i32, n as i32);
    let mut hbm_sites = Vec::new();
    for loc in HbmLoc::ALL {
        if !dp.hbm_placement.contains(loc) {
            continue;
        }
        let site = match loc {
            HbmLoc::Left => HbmSite { kind: HbmSiteKind::Side, row: (mi - 1) / 2, col: -1 },
            HbmLoc::Right => HbmSite { kind: HbmSiteKind::Side, row: mi / 2, col: ni },
            HbmLoc::Top => HbmSite { kind: HbmSiteKind::Side, row: -1, col: (ni - 1) / 2 },
            HbmLoc::Bottom => HbmSite { kind: HbmSiteKind::Side, row: mi, col: ni / 2 },
            HbmLoc::Middle => HbmSite { kind: HbmSiteKind::Middle, row: (mi - 1) / 2, col: (ni - 1) / 2 },
            HbmLoc::Stacked => HbmSite { kind: HbmSiteKind::Stacked, row: 0, col: 0 },
        };
        hbm_sites.push(site);
    }
    MeshLayout { m, n, footprints, tiers, hbm_sites }
}

/// Fixed package-level constraints shared by every design point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackageConstraints {
    pub pkg_area_mm2: f64,
    pub chiplet_spacing_mm: f64,
    pub max_area_per_chiplet_mm2: f64,
    pub area_split: AreaSplit,
    /// Area sacrificed per die for TSVs and keep-out, in 2-tier stacks.
    pub tsv_reserve_mm2: f64,
    /// Package area charged per 2.5D-attached HBM chiplet.
    pub hbm_footprint_mm2: f64,
    pub n_chiplets_max: u32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaSplit {
    pub compute: f64,
    pub sram: f64,
    pub other: f64,
}

impl Default for PackageConstraints {
    fn default() -> Self {
        PackageConstraints {
            pkg_area_mm2: 900.0,
            chiplet_spacing_mm: 1.0,
            max_area_per_chiplet_mm2: 400.0,
            area_split: AreaSplit { compute: 0.40, sram: 0.40, other: 0.20 },
            tsv_reserve_mm2: 2.0,
            hbm_footprint_mm2: 26.0,
            n_chiplets_max: 128,
        }
    }
}

impl PackageConstraints {
    pub fn validate(&self) -> Result<(), String> {
        let sum = self.area_split.compute + self.area_split.sram + self.area_split.other;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("area_split must sum to 1, got {sum}"));
        }
        if self.max_area_per_chiplet_mm2 > self.pkg_area_mm2 {
            return Err("max_area_per_chiplet exceeds package area".to_string());
        }
        Ok(())
    }
}

/// Why a design point is infeasible.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    AreaExceedsCap { area_mm2: f64, cap_mm2: f64 },
    AreaBelowTsvReserve { area_mm2: f64, reserve_mm2: f64 },
    NonPositiveArea { area_mm2: f64 },
    StackedHbmRequiresMemOnLogic,
}

/// Outcome of the package-level feasibility check. Infeasibility is a value,
/// not an error; the environment maps it to a penalty reward.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub area_per_chiplet_mm2: f64,
    pub violations: Vec<Violation>,
    /// Parameters with no effect under this architecture (not a violation).
    pub ignored: Vec<&'static str>,
}

/// Check a design point against the package constraints.
///
/// The area available to AI silicon is the package area minus the 1 mm
/// spacing lanes, `(m + n + 2) * spacing`, minus one HBM footprint per
/// 2.5D-attached HBM; stacked HBMs sit over logic and consume none. That
/// budget divides evenly over the mesh footprints.
pub fn feasible(dp: &DesignPoint, pc: &PackageConstraints) -> FeasibilityReport {
    let lay = layout(dp);
    let hbm_2p5d = lay.hbm_sites.iter().filter(|s| s.kind != HbmSiteKind::Stacked).count();
    let spacing = (lay.m + lay.n + 2) as f64 * pc.chiplet_spacing_mm;
    let available = pc.pkg_area_mm2 - spacing - hbm_2p5d as f64 * pc.hbm_footprint_mm2;
    let area = available / lay.footprints as f64;

    let mut violations = Vec::new();
    if area > pc.max_area_per_chiplet_mm2 {
        violations.push(Violation::AreaExceedsCap { area_mm2: area, cap_mm2: pc.max_area_per_chiplet_mm2 });
    }
    if area <= 0.0 {
        violations.push(Violation::NonPositiveArea { area_mm2: area });
    } else if lay.tiers == 2 && area <= pc.tsv_reserve_mm2 {
        violations.push(Violation::AreaBelowTsvReserve { area_mm2: area, reserve_mm2: pc.tsv_reserve_mm2 });
    }
    if dp.hbm_placement.contains(HbmLoc::Stacked) && dp.arch_type != ArchType::MemOnLogic {
        violations.push(Violation::StackedHbmRequiresMemOnLogic);
    }

    let mut ignored = Vec::new();
    let no_3d_links = match dp.arch_type {
        ArchType::TwoPointFiveD => true,
        ArchType::MemOnLogic => !dp.hbm_placement.contains(HbmLoc::Stacked),
        ArchType::LogicOnLogic => dp.n_chiplets < 2,
    };
    if no_3d_links {
        ignored.extend(["ic_3d", "dr_3d", "links_3d"]);
    }
    if lay.footprints < 2 {
        ignored.extend(["ic_2p5d_ai", "dr_2p5d_ai", "links_2p5d_ai", "trace_2p5d_ai"]);
    }
    if hbm_2p5d == 0 {
        ignored.extend(["ic_2p5d_hbm", "dr_2p5d_hbm", "links_2p5d_hbm", "trace_2p5d_hbm"]);
    }

    FeasibilityReport {
        feasible: violations.is_empty(),
        area_per_chiplet_mm2: area,
        violations,
        ignored,
    }
}
