//! Path selection and the receding-horizon plan/execute/replan loop.
//!
//! A planned tree is reduced to one root-to-leaf path by a vote-style
//! depth-first scoring that favors informative, long paths and penalizes
//! similarity to the best path found so far. The mission loop alternates
//! planning and execution: every replanning interval the vehicle walks a few
//! waypoints of the selected path, sampling the environment at each sampling
//! epoch, then replans from its current pose and clock with all observations
//! (and their original timestamps) committed to the map.

use std::io::Write;

use rand::Rng;

use crate::error::Result;
use crate::field::Environment;
use crate::gp::Observation;
use crate::infogain::MapState;
use crate::kernels::{KernelParams, SpaceTimePoint};
use crate::planner::{plan, NodeId, PlannerConfig, Tree, TreeNode};

/// Root-to-leaf node sequence with its total length and leaf information.
#[derive(Debug, Clone)]
pub struct Path {
    pub nodes: Vec<TreeNode>,
    pub length: f64,
    pub info: f64,
}

impl Path {
    fn from_tree(tree: &Tree, ids: &[NodeId]) -> Self {
        let nodes: Vec<TreeNode> = ids.iter().map(|&id| tree.node(id).clone()).collect();
        let leaf = nodes.last().expect("path has nodes");
        Self {
            length: leaf.cost,
            info: leaf.info,
            nodes,
        }
    }

    /// Synthesizes a path from fixed waypoints visited one per step period.
    pub fn from_waypoints(waypoints: &[(f64, f64)], start_time: f64, period: f64) -> Self {
        let mut nodes = Vec::with_capacity(waypoints.len());
        let mut cost = 0.0;
        for (i, &(x, y)) in waypoints.iter().enumerate() {
            if i > 0 {
                let (px, py) = waypoints[i - 1];
                cost += (x - px).hypot(y - py);
            }
            nodes.push(TreeNode {
                id: i,
                pose: SpaceTimePoint::new(x, y, start_time + period * i as f64),
                cost,
                info: 0.0,
                parent: if i == 0 { None } else { Some(i - 1) },
            });
        }
        Self {
            length: cost,
            info: 0.0,
            nodes,
        }
    }
}

/// Weights of the vote-based path score.
#[derive(Debug, Clone, Copy)]
pub struct SelectConfig {
    /// Bias toward longer paths.
    pub lambda_len: f64,
    /// Penalty for overlap with the best path found so far.
    pub lambda_sim: f64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            lambda_len: 0.1,
            lambda_sim: 0.3,
        }
    }
}

/// Depth-first vote over root-to-leaf paths:
/// `score = info * (1 + lambda_len * normalized_length) *
/// (1 - lambda_sim * similarity)`, where similarity is the fraction of the
/// path's nodes shared with the best-scored path so far. Ties go to the
/// lower leaf id.
pub fn select_path(tree: &Tree, cfg: &SelectConfig) -> Path {
    let n = tree.len();
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for node in tree.nodes().iter().skip(1) {
        children[node.parent.expect("non-root has parent")].push(node.id);
    }

    // Leaf paths in depth-first preorder, children visited in id order.
    let mut paths: Vec<Vec<NodeId>> = Vec::new();
    let mut stack: Vec<(NodeId, Vec<NodeId>)> = vec![(0, vec![0])];
    while let Some((id, path)) = stack.pop() {
        if children[id].is_empty() {
            paths.push(path);
            continue;
        }
        for &c in children[id].iter().rev() {
            let mut p = path.clone();
            p.push(c);
            stack.push((c, p));
        }
    }

    let max_len = paths
        .iter()
        .map(|p| tree.node(*p.last().unwrap()).cost)
        .fold(0.0, f64::max);
    let mut best: Option<(f64, NodeId, usize)> = None;
    let mut on_best = vec![false; n];
    for (pi, path) in paths.iter().enumerate() {
        let leaf = tree.node(*path.last().unwrap());
        let similarity = if best.is_some() {
            path.iter().filter(|&&id| on_best[id]).count() as f64 / path.len() as f64
        } else {
            0.0
        };
        let norm_len = if max_len > 0.0 { leaf.cost / max_len } else { 0.0 };
        let score = leaf.info
            * (1.0 + cfg.lambda_len * norm_len)
            * (1.0 - cfg.lambda_sim * similarity);
        let take = match best {
            None => true,
            Some((bs, bleaf, _)) => score > bs || (score == bs && leaf.id < bleaf),
        };
        if take {
            best = Some((score, leaf.id, pi));
            on_best.fill(false);
            for &id in path {
                on_best[id] = true;
            }
        }
    }
    let (_, _, pi) = best.expect("tree has at least one leaf");
    Path::from_tree(tree, &paths[pi])
}

/// Mission timing and budget parameters.
#[derive(Debug, Clone)]
pub struct MissionConfig {
    /// Prediction window; the mission ends when the clock reaches it.
    pub t_max: f64,
    /// Time between replans.
    pub replan_interval: f64,
    /// Time between samples (one waypoint is visited per period).
    pub sample_period: f64,
    /// Optional cap on traveled distance.
    pub distance_budget: Option<f64>,
    pub select: SelectConfig,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            replan_interval: 10.0,
            sample_period: 5.0,
            distance_budget: None,
            select: SelectConfig::default(),
        }
    }
}

/// Vehicle state as the mission progresses.
#[derive(Debug, Clone)]
pub struct MissionState {
    pub clock: f64,
    pub pose: SpaceTimePoint,
    pub observations: Vec<Observation>,
    pub distance_traveled: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogEvent {
    PlanStart,
    Waypoint,
    Sample,
    Replan,
}

impl LogEvent {
    fn name(&self) -> &'static str {
        match self {
            LogEvent::PlanStart => "plan_start",
            LogEvent::Waypoint => "waypoint",
            LogEvent::Sample => "sample",
            LogEvent::Replan => "replan",
        }
    }
}

/// One mission-log row.
#[derive(Debug, Clone)]
pub struct LogRow {
    pub event: LogEvent,
    pub clock: f64,
    pub x: f64,
    pub y: f64,
    /// Present only for sample rows.
    pub value: Option<f64>,
    pub cumulative_distance: f64,
}

/// Event log: one row per plan start, waypoint arrival, sample, and replan.
#[derive(Debug, Clone, Default)]
pub struct MissionLog {
    rows: Vec<LogRow>,
}

impl MissionLog {
    pub fn rows(&self) -> &[LogRow] {
        &self.rows
    }

    fn push(&mut self, event: LogEvent, state: &MissionState, value: Option<f64>) {
        self.rows.push(LogRow {
            event,
            clock: state.clock,
            x: state.pose.x,
            y: state.pose.y,
            value,
            cumulative_distance: state.distance_traveled,
        });
    }

    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "event,clock,x,y,value,cumulative_distance")?;
        for r in &self.rows {
            let value = r.value.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.event.name(),
                r.clock,
                r.x,
                r.y,
                value,
                r.cumulative_distance
            )?;
        }
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("log is utf8")
    }
}

/// Advances along `path` for one replanning interval, visiting one waypoint
/// per sample period and collecting an observation at every sampling epoch.
/// Short paths park the vehicle at the leaf; the clock still advances by the
/// full interval. Observation timestamps are the mission clock at
/// collection.
pub fn execute_segment<E: Environment, R: Rng>(
    state: &mut MissionState,
    path: &Path,
    env: &E,
    cfg: &MissionConfig,
    rng: &mut R,
    log: &mut MissionLog,
) -> Result<()> {
    debug_assert!(
        path.nodes[0].pose.spatial_distance(&state.pose) <= 1e-6,
        "path must start at the current pose"
    );
    let t_end = (state.clock + cfg.replan_interval).min(cfg.t_max);
    let mut next_idx = 1;
    while state.clock + cfg.sample_period <= t_end + 1e-9 {
        state.clock += cfg.sample_period;
        if next_idx < path.nodes.len() {
            let node = &path.nodes[next_idx];
            let step = state.pose.spatial_distance(&node.pose);
            state.distance_traveled += step;
            state.pose = SpaceTimePoint::new(node.pose.x, node.pose.y, state.clock);
            next_idx += 1;
            log.push(LogEvent::Waypoint, state, None);
        }
        let at = SpaceTimePoint::new(state.pose.x, state.pose.y, state.clock);
        let value = env.sample_at(&at, &mut *rng)?;
        state.observations.push(Observation::new(at, value));
        log.push(LogEvent::Sample, state, Some(value));
    }
    state.clock = t_end;
    state.pose.t = t_end;
    Ok(())
}

/// Everything a mission needs besides the environment.
#[derive(Debug, Clone)]
pub struct MissionSetup {
    pub start: (f64, f64),
    /// Kernel the planner reasons with (the evaluation kernel may differ).
    pub kernel: KernelParams,
    pub noise_var: f64,
    /// Inducing grid the information function scores against.
    pub query_points: Vec<SpaceTimePoint>,
    pub planner: PlannerConfig,
    pub mission: MissionConfig,
}

/// A finished (or aborted) mission: final state, event log, and the tree
/// planned in each interval.
#[derive(Debug)]
pub struct MissionRecord {
    pub state: MissionState,
    pub log: MissionLog,
    pub trees: Vec<Tree>,
    pub completed: bool,
    pub failure: Option<String>,
}

fn empty_state(start: (f64, f64)) -> MissionState {
    MissionState {
        clock: 0.0,
        pose: SpaceTimePoint::new(start.0, start.1, 0.0),
        observations: Vec::new(),
        distance_traveled: 0.0,
    }
}

/// Receding-horizon mission: plan, execute one interval, replan, until the
/// clock reaches `t_max` or the distance budget is exhausted. Sampling
/// failures abort with partial results flagged.
pub fn run_mission<E: Environment, R: Rng>(
    env: &E,
    setup: &MissionSetup,
    rng: &mut R,
) -> MissionRecord {
    let mut state = empty_state(setup.start);
    let mut log = MissionLog::default();
    let mut trees = Vec::new();
    let fail = |state: MissionState, log: MissionLog, trees: Vec<Tree>, e: String| MissionRecord {
        state,
        log,
        trees,
        completed: false,
        failure: Some(e),
    };

    if setup.mission.t_max <= 0.0 {
        return MissionRecord {
            state,
            log,
            trees,
            completed: true,
            failure: None,
        };
    }

    // The survey starts with a reading at the launch point.
    match env.sample_at(&state.pose, &mut *rng) {
        Ok(value) => {
            state.observations.push(Observation::new(state.pose, value));
            log.push(LogEvent::Sample, &state, Some(value));
        }
        Err(e) => return fail(state, log, trees, e.to_string()),
    }

    let mut first = true;
    while state.clock + 1e-9 < setup.mission.t_max {
        if let Some(budget) = setup.mission.distance_budget {
            if state.distance_traveled >= budget - 1e-9 {
                break;
            }
        }
        let train: Vec<SpaceTimePoint> =
            state.observations.iter().map(|o| o.point).collect();
        let map = match MapState::new(
            &train,
            setup.query_points.clone(),
            setup.kernel,
            setup.noise_var,
        ) {
            Ok(m) => m,
            Err(e) => return fail(state, log, trees, e.to_string()),
        };
        log.push(
            if first {
                LogEvent::PlanStart
            } else {
                LogEvent::Replan
            },
            &state,
            None,
        );
        first = false;
        let root = SpaceTimePoint::new(state.pose.x, state.pose.y, state.clock);
        let tree = plan(root, &map, &setup.planner, rng);
        let path = select_path(&tree, &setup.mission.select);
        trees.push(tree);
        if let Err(e) = execute_segment(&mut state, &path, env, &setup.mission, rng, &mut log) {
            return fail(state, log, trees, e.to_string());
        }
    }
    MissionRecord {
        state,
        log,
        trees,
        completed: true,
        failure: None,
    }
}

/// Executes a fixed waypoint tour (a coverage plan) through the same
/// machinery: one waypoint per sample period, plan-once-execute-once.
pub fn run_waypoint_mission<E: Environment, R: Rng>(
    env: &E,
    waypoints: &[(f64, f64)],
    cfg: &MissionConfig,
    rng: &mut R,
) -> MissionRecord {
    assert!(!waypoints.is_empty(), "waypoint tour needs a start");
    let mut state = empty_state(waypoints[0]);
    let mut log = MissionLog::default();
    if cfg.t_max <= 0.0 {
        return MissionRecord {
            state,
            log,
            trees: Vec::new(),
            completed: true,
            failure: None,
        };
    }
    let path = Path::from_waypoints(waypoints, 0.0, cfg.sample_period);
    let fail = |state: MissionState, log: MissionLog, e: String| MissionRecord {
        state,
        log,
        trees: Vec::new(),
        completed: false,
        failure: Some(e),
    };
    match env.sample_at(&state.pose, &mut *rng) {
        Ok(value) => {
            state.observations.push(Observation::new(state.pose, value));
            log.push(LogEvent::Sample, &state, Some(value));
        }
        Err(e) => return fail(state, log, e.to_string()),
    }
    log.push(LogEvent::PlanStart, &state, None);
    let once = MissionConfig {
        replan_interval: cfg.t_max,
        ..cfg.clone()
    };
    if let Err(e) = execute_segment(&mut state, &path, env, &once, rng, &mut log) {
        return fail(state, log, e.to_string());
    }
    MissionRecord {
        state,
        log,
        trees: Vec::new(),
        completed: true,
        failure: None,
    }
}
