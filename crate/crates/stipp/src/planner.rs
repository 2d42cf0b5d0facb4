//! Incremental information-gathering tree planner with space-time nodes.
//!
//! Trees grow RRT-style in the spatial workspace while time advances by a
//! fixed period along every edge, so motion is anisotropic in time: a node's
//! arrival time is always its parent's plus one step period, and revisiting
//! a spatial site later remains a distinct, potentially informative act.
//! Each extension scores candidates by the exact information gain of the
//! proposed observation against the committed map state, seeds the score
//! with the parent's accumulated information, and prunes candidates that are
//! co-located with a node that dominates them in both cost and information.
//!
//! Planning stops when any of three criteria fires: the mean posterior map
//! variance assuming the current best path's observations would be committed
//! drops to the configured threshold, the relative information contribution
//! of recent extensions falls below its floor, or the node budget is
//! reached.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;

use crate::field::Bounds;
use crate::infogain::{proposal_information, MapState};
use crate::kernels::SpaceTimePoint;

pub type NodeId = usize;

/// Planner vertex: arrival pose and time, accumulated path cost and
/// information, and the parent link.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: NodeId,
    pub pose: SpaceTimePoint,
    pub cost: f64,
    pub info: f64,
    pub parent: Option<NodeId>,
}

/// Growable planning tree; node ids are insertion order.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn with_root(pose: SpaceTimePoint) -> Self {
        Self {
            nodes: vec![TreeNode {
                id: 0,
                pose,
                cost: 0.0,
                info: 0.0,
                parent: None,
            }],
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Appends a node. The planner grows trees through this; tests and plan
    /// synthesis may use it directly.
    pub fn push(&mut self, pose: SpaceTimePoint, cost: f64, info: f64, parent: NodeId) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            id,
            pose,
            cost,
            info,
            parent: Some(parent),
        });
        id
    }

    /// Node ids from the root to `id`, inclusive.
    pub fn path_to(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Ids of nodes without children, ascending.
    pub fn leaves(&self) -> Vec<NodeId> {
        let mut has_child = vec![false; self.nodes.len()];
        for n in &self.nodes {
            if let Some(p) = n.parent {
                has_child[p] = true;
            }
        }
        (0..self.nodes.len()).filter(|&i| !has_child[i]).collect()
    }

    /// Node with the highest accumulated information (ties: lowest id).
    pub fn best_node(&self) -> &TreeNode {
        self.nodes
            .iter()
            .max_by(|a, b| {
                a.info
                    .partial_cmp(&b.info)
                    .unwrap()
                    .then(b.id.cmp(&a.id))
            })
            .expect("tree has a root")
    }

    /// Dump format: one `id,parent_id,x,y,t,cost,info` line per node;
    /// the root's parent is -1.
    pub fn write_dump<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "id,parent_id,x,y,t,cost,info")?;
        for n in &self.nodes {
            let parent = n.parent.map(|p| p as i64).unwrap_or(-1);
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                n.id, parent, n.pose.x, n.pose.y, n.pose.t, n.cost, n.info
            )?;
        }
        Ok(())
    }

    pub fn dump_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_dump(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("dump is utf8")
    }
}

/// Fixed planning parameters.
#[derive(Debug, Clone)]
pub struct PlannerConfig {
    /// Maximum spatial motion per planning step, map units.
    pub max_step: f64,
    /// Time advanced by every step, time units.
    pub step_period: f64,
    /// Convergence bound on mean posterior map variance.
    pub var_threshold: f64,
    /// Sliding-window length for the relative-information criterion.
    pub ric_window: usize,
    /// Relative-information floor.
    pub ric_threshold: f64,
    /// Hard cap on tree size.
    pub node_budget: usize,
    /// Connection radius for near-node reconnection, map units.
    pub near_radius: f64,
    /// Spatial workspace.
    pub bounds: Bounds,
}

impl PlannerConfig {
    pub fn for_bounds(bounds: Bounds) -> Self {
        Self {
            max_step: 100.0,
            step_period: 5.0,
            var_threshold: 0.15,
            ric_window: 10,
            ric_threshold: 1e-2,
            node_budget: 200,
            near_radius: 100.0,
            bounds,
        }
    }
}

/// Uniform spatial sample inside the workspace.
pub fn sample_free(bounds: &Bounds, rng: &mut impl Rng) -> (f64, f64) {
    (
        rng.random_range(bounds.x_min..=bounds.x_max),
        rng.random_range(bounds.y_min..=bounds.y_max),
    )
}

/// Node closest in space to `target`; ties go to the lowest id.
pub fn nearest<'t>(tree: &'t Tree, target: (f64, f64)) -> &'t TreeNode {
    tree.nodes()
        .iter()
        .min_by(|a, b| {
            let da = dist_xy(a.pose.xy(), target);
            let db = dist_xy(b.pose.xy(), target);
            da.partial_cmp(&db).unwrap().then(a.id.cmp(&b.id))
        })
        .expect("tree has a root")
}

/// All nodes within `radius` of `point`, ascending id.
pub fn near<'t>(tree: &'t Tree, point: (f64, f64), radius: f64) -> Vec<&'t TreeNode> {
    tree.nodes()
        .iter()
        .filter(|n| dist_xy(n.pose.xy(), point) <= radius)
        .collect()
}

fn dist_xy(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// New pose at most `max_step` along the segment toward `target`; time
/// always advances by one step period.
pub fn steer(from: &TreeNode, target: (f64, f64), cfg: &PlannerConfig) -> SpaceTimePoint {
    let dx = target.0 - from.pose.x;
    let dy = target.1 - from.pose.y;
    let d = dx.hypot(dy);
    let (x, y) = if d <= cfg.max_step {
        (target.0, target.1)
    } else {
        let scale = cfg.max_step / d;
        (from.pose.x + dx * scale, from.pose.y + dy * scale)
    };
    SpaceTimePoint::new(x, y, from.pose.t + cfg.step_period)
}

/// Outcome of one extension round.
#[derive(Debug, Default)]
pub struct ExtensionReport {
    pub added: Vec<NodeId>,
    /// Marginal information each added node contributed over its parent.
    pub gains: Vec<f64>,
}

const COLOCATION_TOL: f64 = 1e-6;

fn dominated_by_existing(tree: &Tree, pose: &SpaceTimePoint, cost: f64, info: f64) -> bool {
    tree.nodes().iter().any(|n| {
        dist_xy(n.pose.xy(), pose.xy()) <= COLOCATION_TOL
            && (n.pose.t - pose.t).abs() <= 1e-9
            && n.info >= info - 1e-12
            && n.cost <= cost + 1e-12
    })
}

/// One sampling round: draw a target, steer from the nearest node, then
/// evaluate the steered pose plus a re-steered candidate from every node in
/// the connection radius. Each surviving candidate becomes a new node whose
/// information seeds from its parent.
pub fn extend(
    tree: &mut Tree,
    map: &MapState,
    cfg: &PlannerConfig,
    rng: &mut impl Rng,
) -> ExtensionReport {
    let target = sample_free(&cfg.bounds, rng);
    let nearest_id = nearest(tree, target).id;
    let steered = steer(tree.node(nearest_id), target, cfg);

    let mut parents: Vec<NodeId> = near(tree, steered.xy(), cfg.near_radius)
        .iter()
        .map(|n| n.id)
        .collect();
    if !parents.contains(&nearest_id) {
        parents.push(nearest_id);
        parents.sort_unstable();
    }

    let mut report = ExtensionReport::default();
    for parent_id in parents {
        if tree.len() >= cfg.node_budget {
            break;
        }
        let parent = tree.node(parent_id).clone();
        let pose = steer(&parent, steered.xy(), cfg);
        let (info, _updated_var) = proposal_information(map, &pose, Some(parent.info));
        let cost = parent.cost + dist_xy(parent.pose.xy(), pose.xy());
        if dominated_by_existing(tree, &pose, cost, info) {
            continue;
        }
        let id = tree.push(pose, cost, info, parent_id);
        report.added.push(id);
        report.gains.push(info - parent.info);
    }
    report
}

/// Relative information contribution tracker: windowed mean of recent
/// per-extension gains over cumulative information.
#[derive(Debug, Clone)]
pub struct RicTracker {
    recent: VecDeque<f64>,
    window: usize,
    cumulative: f64,
}

impl RicTracker {
    pub fn new(window: usize) -> Self {
        Self {
            recent: VecDeque::with_capacity(window.max(1)),
            window: window.max(1),
            cumulative: 0.0,
        }
    }

    pub fn record(&mut self, gain: f64) {
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(gain);
        self.cumulative += gain;
    }

    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }

    pub fn is_empty(&self) -> bool {
        self.recent.is_empty()
    }

    /// Windowed mean gain over cumulative information; +inf while nothing
    /// has been gained at all.
    pub fn ric(&self) -> f64 {
        if self.cumulative <= 0.0 {
            return f64::INFINITY;
        }
        let mean = self.recent.iter().sum::<f64>() / self.recent.len() as f64;
        mean / self.cumulative
    }
}

/// Mean posterior map variance assuming the observations along the path to
/// the tree's most informative node were committed.
pub fn best_tip_mean_var(tree: &Tree, map: &MapState) -> f64 {
    let best = tree.best_node();
    let path = tree.path_to(best.id);
    let mut ext = map.extended();
    for &id in path.iter().skip(1) {
        ext.push(tree.node(id).pose);
    }
    ext.mean_var()
}

/// Grows a tree from `root` until the variance threshold, the relative
/// information floor, or the node budget fires.
pub fn plan(
    root: SpaceTimePoint,
    map: &MapState,
    cfg: &PlannerConfig,
    rng: &mut impl Rng,
) -> Tree {
    let mut tree = Tree::with_root(root);
    let mut tracker = RicTracker::new(cfg.ric_window);
    let mut stalled = 0usize;
    while tree.len() < cfg.node_budget {
        let report = extend(&mut tree, map, cfg, rng);
        if report.added.is_empty() {
            // Saturated workspaces can refuse extensions indefinitely; bail
            // out once a full window of rounds makes no progress.
            stalled += 1;
            if stalled > 8 * cfg.ric_window {
                break;
            }
        } else {
            stalled = 0;
        }
        let round_gain = report.gains.iter().copied().fold(0.0, f64::max);
        tracker.record(round_gain);
        if tracker.ric() < cfg.ric_threshold {
            break;
        }
        if best_tip_mean_var(&tree, map) <= cfg.var_threshold {
            break;
        }
    }
    tree
}
