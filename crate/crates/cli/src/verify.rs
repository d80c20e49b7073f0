//! Invariant suite over seeded random instances.

use std::fmt;

use clique_steiner_core::engine::EngineConfig;
use clique_steiner_core::generate::{sample_instance, SuiteShape};
use clique_steiner_core::mst::{clusters_of, phase_bound};
use clique_steiner_core::oracles::{brute_force_spf, dreyfus_wagner, kruskal};
use clique_steiner_core::spf::{relax_message_bound, validate_spf};
use clique_steiner_core::steiner::{PruneMode, CLASSIFY_STEP, MST_STEP, SPF_STEP};
use clique_steiner_core::{stccm_a, stccm_b, PipelineOptions, SteinerRun, WeightedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Tree,
    Spf,
    Mst,
    Ratio,
    Rounds,
    Messages,
}

impl Check {
    pub const ALL: [Check; 6] = [Check::Tree, Check::Spf, Check::Mst, Check::Ratio, Check::Rounds, Check::Messages];

    pub fn name(self) -> &'static str {
        match self {
            Check::Tree => "tree",
            Check::Spf => "spf",
            Check::Mst => "mst",
            Check::Ratio => "ratio",
            Check::Rounds => "rounds",
            Check::Messages => "messages",
        }
    }

    /// Parses a `--check` value; `all` expands to every check.
    pub fn parse_set(s: &str) -> Option<Vec<Check>> {
        if s == "all" {
            return Some(Check::ALL.to_vec());
        }
        let one = Check::ALL.into_iter().find(|c| c.name() == s)?;
        // output structure is checked whenever pipelines run
        Some(if one == Check::Tree { vec![one] } else { vec![Check::Tree, one] })
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub instances: usize,
    pub shape: SuiteShape,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub prune_mode: PruneMode,
    pub engine: EngineConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            instances: 200,
            shape: SuiteShape::default(),
            seed: 0,
            checks: Check::ALL.to_vec(),
            prune_mode: PruneMode::Normal,
            engine: EngineConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub seed: u64,
    pub n: usize,
    pub t: usize,
    pub check: Check,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FAIL {} seed={} n={} t={}: {}", self.check.name(), self.seed, self.n, self.t, self.message)
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub instances: usize,
    pub checks: Vec<Check>,
    pub failures: Vec<Failure>,
    /// Largest `cost / opt` over both pipelines.
    pub max_ratio: f64,
    /// Largest `cost / opt` divided by `2(1 − 1/t)`.
    pub max_ratio_vs_bound: f64,
    /// Largest relaxation rounds minus `S`.
    pub max_spf_excess: i64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for &c in &self.checks {
            let failed = self.failures.iter().filter(|f| f.check == c).count();
            let verdict = if failed == 0 { "pass" } else { "FAIL" };
            s += &format!("check {}: {verdict} ({} instances, {failed} failures)\n", c.name(), self.instances);
        }
        if self.checks.contains(&Check::Ratio) {
            s += &format!("max ratio: {:.6}\n", self.max_ratio);
            s += &format!("max ratio / 2(1-1/t): {:.6}\n", self.max_ratio_vs_bound);
        }
        if self.checks.contains(&Check::Rounds) {
            s += &format!("max relaxation rounds - S: {}\n", self.max_spf_excess);
        }
        for f in &self.failures {
            s += &format!("{f}\n");
        }
        s += if self.passed() { "verify: PASS\n" } else { "verify: FAIL\n" };
        s
    }
}

struct Case<'a> {
    g: &'a WeightedGraph,
    seed: u64,
    failures: &'a mut Vec<Failure>,
}

impl Case<'_> {
    fn fail(&mut self, check: Check, message: String) {
        self.failures.push(Failure {
            seed: self.seed,
            n: self.g.node_count(),
            t: self.g.terminal_count(),
            check,
            message,
        });
    }
}

#[derive(Default)]
struct Outcome {
    failures: Vec<Failure>,
    max_ratio: f64,
    max_vs_bound: f64,
    max_excess: i64,
}

fn run_instance(cfg: &VerifyConfig, seed: u64) -> Outcome {
    let opts = PipelineOptions { engine: cfg.engine, prune_mode: cfg.prune_mode };
    let g = sample_instance(&cfg.shape, seed);
    let mut out = Outcome { max_excess: i64::MIN, ..Default::default() };
    let mut case = Case { g: &g, seed, failures: &mut out.failures };
    let runs = match (stccm_a(&g, &opts), stccm_b(&g, &opts)) {
        (Ok(a), Ok(b)) => [("stccm-a", a), ("stccm-b", b)],
        (Err(e), _) | (_, Err(e)) => {
            case.fail(Check::Tree, format!("pipeline error: {e}"));
            return out;
        }
    };
    for &check in &cfg.checks {
        check_instance(check, &mut case, &runs, &mut out.max_ratio, &mut out.max_vs_bound, &mut out.max_excess);
    }
    out
}

/// Runs every instance, spread over the available cores. Results are merged
/// in seed order so the report does not depend on scheduling.
pub fn run_suite(cfg: &VerifyConfig) -> VerifyReport {
    let workers = std::thread::available_parallelism().map_or(1, |w| w.get()).min(cfg.instances.max(1));
    let seeds: Vec<u64> = (0..cfg.instances).map(|i| cfg.seed.wrapping_add(i as u64)).collect();
    let chunk = seeds.len().div_ceil(workers).max(1);
    let outcomes: Vec<Outcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&s| run_instance(cfg, s)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("verify worker panicked")).collect()
    });
    let mut report = VerifyReport { instances: cfg.instances, checks: cfg.checks.clone(), ..Default::default() };
    report.max_spf_excess = i64::MIN;
    for o in outcomes {
        report.failures.extend(o.failures);
        report.max_ratio = report.max_ratio.max(o.max_ratio);
        report.max_ratio_vs_bound = report.max_ratio_vs_bound.max(o.max_vs_bound);
        report.max_spf_excess = report.max_spf_excess.max(o.max_excess);
    }
    report
}

fn check_instance(
    check: Check,
    case: &mut Case<'_>,
    runs: &[(&str, SteinerRun); 2],
    max_ratio: &mut f64,
    max_vs_bound: &mut f64,
    max_excess: &mut i64,
) {
    let g = case.g;
    let n = g.node_count();
    let t = g.terminal_count();
    match check {
        Check::Tree => {
            for (name, run) in runs {
                for v in run.tree.violations(g) {
                    case.fail(check, format!("{name}: {v}"));
                }
            }
        }
        Check::Spf => {
            let oracle = brute_force_spf(g);
            for (name, run) in runs {
                let f = &run.forest;
                if f.source != oracle.source || f.distance != oracle.distance {
                    case.fail(check, format!("{name}: forest disagrees with nearest-terminal oracle"));
                }
                for v in validate_spf(f, g) {
                    case.fail(check, format!("{name}: {v}"));
                }
            }
        }
        Check::Mst => {
            for (name, run) in runs {
                let expected = kruskal(n, &run.modified.reweighted_edges());
                if expected.as_ref() != Ok(&run.spanning_tree) {
                    case.fail(check, format!("{name}: clique MST differs from Kruskal"));
                }
                if run.mst_phases.len() > phase_bound(n) {
                    case.fail(check, format!("{name}: {} phases, bound {}", run.mst_phases.len(), phase_bound(n)));
                }
                let mut so_far = Vec::new();
                for (k, p) in run.mst_phases.iter().enumerate() {
                    so_far.extend_from_slice(&p.selected);
                    let clusters = clusters_of(n, &so_far);
                    let min = (0..n).map(|v| clusters.iter().filter(|&&c| c == clusters[v]).count()).min().unwrap();
                    let need = 1u128 << (1u32 << k).min(64);
                    if min != n && (min as u128) < need {
                        case.fail(check, format!("{name}: smallest cluster after phase {} has {min} nodes", k + 1));
                    }
                }
            }
        }
        Check::Ratio => {
            let opt = match dreyfus_wagner(g) {
                Ok(o) => o,
                Err(e) => return case.fail(check, e.to_string()),
            };
            let l = opt.leaves as u128;
            for (name, run) in runs {
                let cost = run.cost();
                if l * cost.raw() as u128 > 2 * (l - 1) * opt.cost.raw() as u128 {
                    case.fail(check, format!("{name}: cost {cost} exceeds 2(1-1/{l}) x {}", opt.cost));
                }
                if opt.cost.raw() > 0 {
                    let r = cost.ratio(opt.cost);
                    *max_ratio = max_ratio.max(r);
                    *max_vs_bound = max_vs_bound.max(r / (2.0 * (1.0 - 1.0 / t as f64)));
                }
            }
        }
        Check::Rounds => {
            let b = &runs[1].1;
            let s = b.hop_diameter.expect("relaxation run records S");
            let rounds = b.metrics.phase(SPF_STEP).map_or(0, |p| p.rounds);
            *max_excess = (*max_excess).max(rounds as i64 - s as i64);
            if rounds > s + 2 {
                case.fail(check, format!("stccm-b: relaxation took {rounds} rounds, S + 2 = {}", s + 2));
            }
        }
        Check::Messages => {
            let b = &runs[1].1;
            let s = b.hop_diameter.expect("relaxation run records S");
            let sent = b.metrics.phase(SPF_STEP).map_or(0, |p| p.messages);
            if sent > relax_message_bound(n, t, s) {
                case.fail(check, format!("stccm-b: relaxation sent {sent} messages, bound {}", relax_message_bound(n, t, s)));
            }
            for (name, run) in runs {
                let classify = run.metrics.phase(CLASSIFY_STEP).map_or(0, |p| p.messages);
                if classify != 2 * g.edge_count() {
                    case.fail(check, format!("{name}: classification sent {classify} messages, expected 2m"));
                }
                let mst = run.metrics.phase(MST_STEP).map_or(0, |p| p.messages);
                if mst > 5 * n * n {
                    case.fail(check, format!("{name}: MST sent {mst} messages, more than 5n^2"));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let cfg = VerifyConfig { instances: 12, ..Default::default() };
        let report = run_suite(&cfg);
        assert!(report.passed(), "{}", report.render());
        assert!(report.max_ratio >= 1.0);
    }

    #[test]
    fn broken_pruning_fails() {
        let cfg = VerifyConfig { instances: 30, prune_mode: PruneMode::KeepAll, checks: vec![Check::Tree], ..Default::default() };
        let report = run_suite(&cfg);
        assert!(!report.passed());
        assert!(report.failures.iter().any(|f| f.message.contains("is not a terminal")));
    }

    #[test]
    fn check_names() {
        assert_eq!(Check::parse_set("all").unwrap().len(), 6);
        assert_eq!(Check::parse_set("ratio").unwrap(), vec![Check::Tree, Check::Ratio]);
        assert!(Check::parse_set("nope").is_none());
    }
}
