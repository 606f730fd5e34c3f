//! Reference implementations used as test oracles. Written from the math,
//! not from the library code.
#![allow(dead_code)]

pub type P2 = [f64; 2];

/// Corners of a rectangle, counter-clockwise.
pub fn rect_corners(cx: f64, cy: f64, heading: f64, hl: f64, hw: f64) -> Vec<P2> {
    let (s, c) = heading.sin_cos();
    [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
        .iter()
        .map(|&(u, v)| [cx + c * u - s * v, cy + s * u + c * v])
        .collect()
}

fn side(a: P2, b: P2, p: P2) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Sutherland-Hodgman: clip `subject` by every edge of the convex CCW `clip`.
pub fn clip_polygon(subject: &[P2], clip: &[P2]) -> Vec<P2> {
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let input = std::mem::take(&mut out);
        if input.is_empty() {
            break;
        }
        for j in 0..input.len() {
            let (p, q) = (input[j], input[(j + 1) % input.len()]);
            let (sp, sq) = (side(a, b, p), side(a, b, q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
    }
    out
}

pub fn polygon_area(poly: &[P2]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        .abs()
}

/// Two convex polygons intersect iff clipping one by the other leaves
/// something behind.
pub fn polygons_intersect(a: &[P2], b: &[P2]) -> bool {
    !clip_polygon(a, b).is_empty()
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    x
}

/// `k`-th derivative of `sum c_i t^i`, evaluated term by term.
pub fn poly_deriv(c: &[f64], k: u32, t: f64) -> f64 {
    c.iter()
        .enumerate()
        .filter(|(i, _)| *i as u32 >= k)
        .map(|(i, ci)| {
            let fall: f64 = (0..k).map(|j| (i as u32 - j) as f64).product();
            ci * fall * t.powi(i as i32 - k as i32)
        })
        .sum()
}

/// Coefficients of the `k`-th derivative polynomial.
pub fn poly_derivative(c: &[f64], k: usize) -> Vec<f64> {
    (k..c.len())
        .map(|i| {
            let fall: f64 = (0..k).map(|j| (i - j) as f64).product();
            c[i] * fall
        })
        .collect()
}

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact integral of a polynomial over `[0, t]`.
pub fn poly_integral(c: &[f64], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .map(|(i, ci)| ci * t.powi(i as i32 + 1) / (i as f64 + 1.0))
        .sum()
}

/// Exact closed-form logistic harm for the published constants.
pub fn logistic_harm(delta_v: f64, angle_term: f64) -> f64 {
    1.0 / (1.0 + (4.457 - 0.177 * delta_v - angle_term).exp())
}

/// Mean absolute pairwise difference by brute-force ordered-pair enumeration.
pub fn gini_like(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += (values[i] - values[j]).abs();
            }
        }
    }
    total / (n * (n - 1)) as f64
}

pub fn approx(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Proptest settings without regression files.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        ..Default::default()
    }
}

use ethiplan::agent::{RewardBreakdown, TerminalEvent};
use ethiplan::ethics::CostBreakdown;
use ethiplan::planner::PlanAction;
use ethiplan::scenario::{EpisodeLog, RunMode, StepRecord};

/// One step carrying the given worst-case pair; `agents == 0` means no
/// other participant was present.
pub fn record(step: usize, agents: usize, ttc: Option<f64>, risk: f64) -> StepRecord {
    StepRecord {
        step,
        t_s: step as f64 * 0.1,
        x_m: 0.0,
        y_m: 0.0,
        heading_rad: 0.0,
        speed_mps: 0.0,
        l_m: 0.0,
        d_m: 0.0,
        accel_mps2: 0.0,
        jerk_mps3: 0.0,
        steer_rad: 0.0,
        action: PlanAction::new(2.0, 0.0, 0.0),
        ttc_s: (0..agents).map(|i| (format!("a{i}"), ttc)).collect(),
        min_ttc_s: ttc,
        ego_risk: 0.0,
        max_other_risk: risk,
        risks: Vec::new(),
        cost: CostBreakdown::default(),
        reward: RewardBreakdown::default(),
        penalized_reward: 0.0,
    }
}

pub fn constructed_log(seed: u64, steps: Vec<StepRecord>) -> EpisodeLog {
    EpisodeLog {
        scenario: "constructed".into(),
        policy: "none".into(),
        mode: RunMode::Ethical,
        seed,
        step_s: 0.1,
        cost_aggregation: Default::default(),
        steps,
        terminal: TerminalEvent::Timeout,
        episode_return: 0.0,
        episode_cost: 0.0,
        lambda_before: 0.0,
        lambda_after: 0.0,
    }
}
