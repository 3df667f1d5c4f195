//! DNN benchmark descriptors and workload-level metrics: inference tasks per
//! second and per joule for a given effective throughput and per-op energy.

use serde::{Deserialize, Serialize};

/// One benchmark: scalar operation counts per forward-pass task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workload {
    pub name: String,
    pub domain: String,
    /// GEMM operations per task, GFLOPs.
    pub ops_g_gflops: f64,
    /// Non-GEMM operations per task, GFLOPs.
    #[serde(default)]
    pub ops_ng_gflops: f64,
    /// Mapping efficiency.
    pub m_eff: f64,
    /// Operand width, bits.
    pub d_w_bits: u32,
}

impl Workload {
    fn new(name: &str, domain: &str, ops_g_gflops: f64) -> Self {
        Workload {
            name: name.to_string(),
            domain: domain.to_string(),
            ops_g_gflops,
            ops_ng_gflops: 0.0,
            m_eff: 1.0,
            d_w_bits: 8,
        }
    }

    /// Total operations per task.
    pub fn ops_per_task(&self) -> f64 {
        (self.ops_g_gflops + self.ops_ng_gflops) * 1e9
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.ops_g_gflops <= 0.0 {
            return Err(format!("{}: ops_g must be positive", self.name));
        }
        if !(self.m_eff > 0.0 && self.m_eff <= 1.0) {
            return Err(format!("{}: m_eff must be in (0, 1]", self.name));
        }
        Ok(())
    }
}

/// The five built-in MLPerf-style benchmarks.
pub fn builtin_benchmarks() -> Vec<Workload> {
    vec![
        Workload::new("Resnet50", "Image classification", 4.0),
        Workload::new("Efficientdet", "Light weight object detection", 410.0),
        Workload::new("mask-RCNN", "Heavy weight object detection", 447.0),
        Workload::new("3D-UNet", "Biomedical image segmentation", 947.0),
        Workload::new("BERT", "Natural Language Processing", 32.0),
    ]
}

/// Tasks completed per second: `system_ops * m_eff / ops_per_task`.
pub fn tasks_per_sec(system_ops: f64, w: &Workload) -> f64 {
    system_ops * w.m_eff / w.ops_per_task()
}

/// Tasks completed per joule, from the per-op energy in pJ:
/// `1 / (e_op * ops_per_task)`.
pub fn tasks_per_joule(e_op_pj: f64, w: &Workload) -> f64 {
    1.0 / (e_op_pj * 1e-12 * w.ops_per_task())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builtin_table_rows() {
        let b = builtin_benchmarks();
        assert_eq!(b.len(), 5);
        let by_name = |n: &str| b.iter().find(|w| w.name == n).unwrap();
        assert_eq!(by_name("Resnet50").ops_g_gflops, 4.0);
        assert_eq!(by_name("BERT").ops_g_gflops, 32.0);
        assert_eq!(by_name("3D-UNet").ops_g_gflops, 947.0);
        assert_eq!(by_name("Efficientdet").ops_g_gflops, 410.0);
        assert_eq!(by_name("mask-RCNN").ops_g_gflops, 447.0);
        for w in &b {
            w.validate().unwrap();
        }
    }

    #[test]
    fn tasks_per_sec_examples() {
        let resnet = &builtin_benchmarks()[0];
        assert_relative_eq!(tasks_per_sec(4e14, resnet), 100_000.0, max_relative = 1e-12);

        let bert = Workload::new("BERT", "NLP", 32.0);
        assert_relative_eq!(tasks_per_sec(4e14, &bert), 12_500.0, max_relative = 1e-12);

        let mut half = resnet.clone();
        half.m_eff = 0.5;
        assert_relative_eq!(tasks_per_sec(4e14, &half), 50_000.0, max_relative = 1e-12);
    }

    #[test]
    fn tasks_per_joule_examples() {
        let resnet = &builtin_benchmarks()[0];
        assert_relative_eq!(tasks_per_joule(1.0, resnet), 250.0, max_relative = 1e-12);
        assert_relative_eq!(tasks_per_joule(2.0, resnet), 125.0, max_relative = 1e-12);
    }

    #[test]
    fn metrics_are_homogeneous() {
        let w = &builtin_benchmarks()[3];
        for k in [2.0, 5.0, 11.0] {
            assert_relative_eq!(tasks_per_sec(k * 1e12, w), k * tasks_per_sec(1e12, w), max_relative = 1e-12);
            assert_relative_eq!(tasks_per_joule(k, w), tasks_per_joule(1.0, w) / k, max_relative = 1e-12);
        }
    }

    #[test]
    fn benchmark_table_round_trips_through_json() {
        let b = builtin_benchmarks();
        let json = serde_json::to_string(&b).unwrap();
        let back: Vec<Workload> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
    }
}
