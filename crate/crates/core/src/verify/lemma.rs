//! Grid checks of the monotonicity of the normal hazard and of the
//! increment inequalities for `Ψ`.

use crate::error::{config, Result};
use crate::normal_tail::NormalEval;

pub const DEFAULT_STEPS: [f64; 4] = [0.01, 0.1, 1.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            start: -8.0,
            end: 8.0,
            step: 1e-3,
        }
    }
}

impl Grid {
    /// Parses `a:b:step`.
    pub fn parse(s: &str) -> Result<Grid> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| config(format!("bad grid '{s}'")))?;
        let [start, end, step] = parts[..] else {
            return Err(config(format!("grid '{s}' is not a:b:step")));
        };
        if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
            return Err(config(format!("grid '{s}' is empty or unbounded")));
        }
        Ok(Grid { start, end, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        // by index, so the grid does not drift
        (0..count)
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub x: f64,
    pub delta: f64,
    /// Signed margin; positive means the inequality holds.
    pub slack: f64,
}

/// Smallest successive increment of `ρ` and of `−r` along the grid.
pub fn monotonicity(grid: &Grid) -> Result<(LemmaCheck, LemmaCheck)> {
    let evals = grid
        .points()
        .into_iter()
        .map(NormalEval::at)
        .collect::<Result<Vec<_>>>()?;
    let mut rho = LemmaCheck {
        name: "rho_increasing",
        x: grid.start,
        delta: grid.step,
        slack: f64::INFINITY,
    };
    let mut r = LemmaCheck {
        name: "r_decreasing",
        ..rho
    };
    for w in evals.windows(2) {
        let d = w[1].rho - w[0].rho;
        if d < rho.slack {
            rho.slack = d;
            rho.x = w[0].x;
        }
        let d = w[0].r - w[1].r;
        if d < r.slack {
            r.slack = d;
            r.x = w[0].x;
        }
    }
    Ok((rho, r))
}

/// The six one-sided increment inequalities at `(x, δ)`, `δ ≥ 0`:
///
/// ```text
/// δρ(x)          ≤ Ψ(x+δ) − Ψ(x)                    ≤ δρ(x+δ)
/// δr(x+δ)        ≤ Ψ(x+δ) − Ψ(x) − (x+δ)²/2 + x²/2  ≤ δr(x)
/// xδ + δ²/2      ≤ Ψ(x+δ) − Ψ(x)                    ≤ ρ(x)δ + δ²/2
/// ```
pub fn increment_checks(x: f64, delta: f64) -> Result<[LemmaCheck; 6]> {
    let a = NormalEval::at(x)?;
    let b = NormalEval::at(x + delta)?;
    let inc = b.psi - a.psi;
    // (x+δ)²/2 − x²/2 = xδ + δ²/2
    let quad = x * delta + 0.5 * delta * delta;
    let at = |name, slack| LemmaCheck {
        name,
        x,
        delta,
        slack,
    };
    Ok([
        at("i_lower", inc - delta * a.rho),
        at("i_upper", delta * b.rho - inc),
        at("ii_lower", (inc - quad) - delta * b.r),
        at("ii_upper", delta * a.r - (inc - quad)),
        at("iii_lower", inc - quad),
        at("iii_upper", a.rho * delta + 0.5 * delta * delta - inc),
    ])
}

/// Worst slack of each increment inequality over `grid × steps`.
pub fn increment_suite(grid: &Grid, steps: &[f64]) -> Result<Vec<LemmaCheck>> {
    let mut worst: Vec<LemmaCheck> = Vec::new();
    for x in grid.points() {
        for &d in steps {
            for c in increment_checks(x, d)? {
                match worst.iter_mut().find(|w| w.name == c.name) {
                    Some(w) if c.slack < w.slack => *w = c,
                    Some(_) => {}
                    None => worst.push(c),
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = Grid::parse("-1:1:0.5").unwrap();
        assert_eq!(g.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(Grid::default().points().len(), 16_001);
        assert!(Grid::parse("1:0:0.1").is_err());
        assert!(Grid::parse("0:1").is_err());
        assert!(Grid::parse("0:1:0").is_err());
        assert!(Grid::parse("a:b:c").is_err());
    }

    #[test]
    fn coarse_suite_holds() {
        let g = Grid::parse("-8:8:0.25").unwrap();
        let (rho, r) = monotonicity(&g).unwrap();
        assert!(rho.slack > 0.0 && r.slack > 0.0);
        let worst = increment_suite(&g, &DEFAULT_STEPS).unwrap();
        assert_eq!(worst.len(), 6);
        for c in worst {
            assert!(c.slack >= -1e-10, "{c:?}");
        }
    }

    #[test]
    fn zero_step_is_tight() {
        for c in increment_checks(1.5, 0.0).unwrap() {
            assert_eq!(c.slack, 0.0);
        }
    }
}
