//! Two-factor uniform-design lattices.

use crate::error::{Error, Result};

// Shifted good-lattice-point designs with minimal centred L2 discrepancy
// among all `u_2 = (h * u_1 + s) mod n`, levels 1..=n.
const UD5: [(u8, u8); 5] = [(1, 4), (2, 1), (3, 3), (4, 5), (5, 2)];
const UD9: [(u8, u8); 9] = [(1, 4), (2, 6), (3, 8), (4, 1), (5, 3), (6, 5), (7, 7), (8, 9), (9, 2)];
const UD13: [(u8, u8); 13] = [
    (1, 3),
    (2, 8),
    (3, 13),
    (4, 5),
    (5, 10),
    (6, 2),
    (7, 7),
    (8, 12),
    (9, 4),
    (10, 9),
    (11, 1),
    (12, 6),
    (13, 11),
];

pub const SUPPORTED_RUNS: [usize; 3] = [5, 9, 13];

/// Integer lattice for a run count.
pub fn ud_table(runs: usize) -> Result<&'static [(u8, u8)]> {
    match runs {
        5 => Ok(&UD5),
        9 => Ok(&UD9),
        13 => Ok(&UD13),
        _ => Err(Error::InvalidInput(format!(
            "no uniform design with {runs} runs (supported: 5, 9, 13)"
        ))),
    }
}

/// Axis-aligned box in `(log2 C, log2 gamma)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub log2_c: (f64, f64),
    pub log2_gamma: (f64, f64),
}

impl Rect {
    pub fn new(log2_c: (f64, f64), log2_gamma: (f64, f64)) -> Result<Rect> {
        let r = Rect { log2_c, log2_gamma };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("log2 C", self.log2_c), ("log2 gamma", self.log2_gamma)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInput(format!("{name} range [{lo}, {hi}] is empty or degenerate")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, log2_c: f64, log2_gamma: f64) -> bool {
        (self.log2_c.0..=self.log2_c.1).contains(&log2_c) && (self.log2_gamma.0..=self.log2_gamma.1).contains(&log2_gamma)
    }

    /// Box of side fraction `frac` of this one centred at `center`,
    /// intersected with this box.
    pub fn sub_rect(&self, center: (f64, f64), frac: f64) -> Rect {
        let clip = |(lo, hi): (f64, f64), c: f64| {
            let half = frac * (hi - lo) / 2.0;
            let c = c.clamp(lo, hi);
            ((c - half).max(lo), (c + half).min(hi))
        };
        Rect {
            log2_c: clip(self.log2_c, center.0),
            log2_gamma: clip(self.log2_gamma, center.1),
        }
    }
}

/// The `runs`-point lattice mapped onto `rect`; level `u` of `n` goes to
/// `lo + u / (n + 1) * (hi - lo)`.
pub fn ud_points(rect: &Rect, runs: usize) -> Result<Vec<(f64, f64)>> {
    rect.validate()?;
    let table = ud_table(runs)?;
    let n = (runs + 1) as f64;
    let map = |(lo, hi): (f64, f64), u: u8| lo + f64::from(u) / n * (hi - lo);
    Ok(table
        .iter()
        .map(|&(a, b)| (map(rect.log2_c, a), map(rect.log2_gamma, b)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn centred_l2(design: &[(usize, usize)], n: usize) -> f64 {
        let x: Vec<[f64; 2]> = design
            .iter()
            .map(|&(a, b)| [(a as f64 - 0.5) / n as f64, (b as f64 - 0.5) / n as f64])
            .collect();
        let nf = n as f64;
        let s1: f64 = x
            .iter()
            .map(|r| r.iter().map(|&v| 1.0 + 0.5 * (v - 0.5).abs() - 0.5 * (v - 0.5).powi(2)).product::<f64>())
            .sum();
        let mut s2 = 0.0;
        for r in &x {
            for t in &x {
                s2 += (0..2)
                    .map(|k| 1.0 + 0.5 * (r[k] - 0.5).abs() + 0.5 * (t[k] - 0.5).abs() - 0.5 * (r[k] - t[k]).abs())
                    .product::<f64>();
            }
        }
        (13.0f64 / 12.0).powi(2) - 2.0 / nf * s1 + s2 / (nf * nf)
    }

    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }

    #[test]
    fn tables_minimise_discrepancy_over_shifted_lattices() {
        for n in SUPPORTED_RUNS {
            let table: Vec<(usize, usize)> = ud_table(n)
                .unwrap()
                .iter()
                .map(|&(a, b)| (a as usize, b as usize))
                .collect();
            let ours = centred_l2(&table, n);
            let mut best = f64::INFINITY;
            for h in (1..n).filter(|&h| gcd(h, n) == 1) {
                for s in 0..n {
                    let d: Vec<_> = (1..=n).map(|i| (i, match (h * i + s) % n { 0 => n, v => v })).collect();
                    best = best.min(centred_l2(&d, n));
                }
            }
            assert!(ours <= best + 1e-15, "n = {n}: {ours} vs {best}");
        }
    }

    #[test]
    fn columns_are_permutations() {
        for n in SUPPORTED_RUNS {
            let t = ud_table(n).unwrap();
            for col in 0..2 {
                let mut v: Vec<u8> = t.iter().map(|p| if col == 0 { p.0 } else { p.1 }).collect();
                v.sort();
                assert_eq!(v, (1..=n as u8).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn unit_square_nine_runs() {
        let pts = ud_points(&Rect::new((0.0, 1.0), (0.0, 1.0)).unwrap(), 9).unwrap();
        assert_eq!(pts.len(), 9);
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                assert!((a.0 - b.0).abs().max((a.1 - b.1).abs()) > 0.0);
            }
            for v in [a.0, a.1] {
                let level = v * 10.0;
                assert!((level - level.round()).abs() < 1e-12 && (1.0..=9.0).contains(&level.round()));
            }
        }
    }

    #[test]
    fn affine_image_inside_bounds() {
        let rect = Rect::new((-5.0, 15.0), (-15.0, 3.0)).unwrap();
        let pts = ud_points(&rect, 9).unwrap();
        assert!(pts.iter().all(|&(c, g)| rect.contains(c, g)));
        assert_eq!(pts[0], (-5.0 + 2.0, -15.0 + 0.4 * 18.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Rect::new((0.0, 1.0), (2.0, 2.0)).is_err());
        assert!(ud_points(&Rect::new((0.0, 1.0), (0.0, 1.0)).unwrap(), 7).is_err());
    }

    #[test]
    fn sub_rect_clips_at_corner() {
        let rect = Rect::new((-5.0, 15.0), (-15.0, 3.0)).unwrap();
        let s = rect.sub_rect((-5.0, 3.0), 0.5);
        assert_eq!(s.log2_c, (-5.0, 0.0));
        assert_eq!(s.log2_gamma, (-1.5, 3.0));
    }
}
