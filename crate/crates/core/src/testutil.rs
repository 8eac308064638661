use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::hscop::{evaluate, ConstraintRow, HscopProblem, L1Group, LinearTerm, Phi, Point};
use crate::pwa::{AffineFn, BoxDomain, DcPwa, MaxAffine, MinAffine};

pub(crate) fn rand_aff(rng: &mut ChaCha8Rng, n: usize) -> AffineFn {
    AffineFn::new(
        (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        rng.gen_range(-1.0..1.0),
    )
    .unwrap()
}

pub(crate) fn required_gamma(p: &HscopProblem, x: &[f64]) -> f64 {
    let e = evaluate(p, &Point::new(x.to_vec(), 0.0)).unwrap();
    p.rows
        .iter()
        .zip(&e.row_values)
        .filter(|(r, _)| r.residual_allowed)
        .map(|(r, v)| (r.rhs - v).max(0.0))
        .fold(0.0, f64::max)
}

/// Small random instance; every row allows a residual so any box point is
/// feasible once γ is large enough.
pub(crate) fn random_problem(rng: &mut ChaCha8Rng, atoms: usize, dc_atoms: usize) -> HscopProblem {
    let n = rng.gen_range(1..=3);
    let mut p = HscopProblem::new(BoxDomain::cube(n, -1.0, 1.0).unwrap());
    for k in 0..atoms {
        let phi = if k < dc_atoms {
            let plus = MaxAffine::new((0..rng.gen_range(1..=2)).map(|_| rand_aff(rng, n)).collect()).unwrap();
            let minus = MaxAffine::new((0..rng.gen_range(1..=2)).map(|_| rand_aff(rng, n)).collect()).unwrap();
            Phi::Dc(DcPwa::new(plus, minus).unwrap())
        } else {
            Phi::Concave(MinAffine::new((0..rng.gen_range(1..=3)).map(|_| rand_aff(rng, n)).collect()).unwrap())
        };
        let a = p.add_atom(phi);
        if rng.gen_bool(0.7) {
            p.objective.heaviside.push(LinearTerm { atom: a, weight: rng.gen_range(0.0..2.0) });
        }
    }
    p.objective.linear = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if rng.gen_bool(0.5) {
        p.objective.l1_groups.push(L1Group { indices: (0..n).collect(), weight: rng.gen_range(0.0..0.5) });
    }
    p.objective.residual_penalty = rng.gen_range(0.5..3.0);
    for r in 0..rng.gen_range(0..=2) {
        let mut row = ConstraintRow::new(format!("r{r}"), rng.gen_range(0.0..2.0)).with_residual();
        for a in 0..atoms {
            if rng.gen_bool(0.5) {
                row.add_linear(a, rng.gen_range(0.0..1.0));
            }
            for b in (a + 1)..atoms {
                if rng.gen_bool(0.3) {
                    row.add_product(a, b, rng.gen_range(0.0..1.0));
                }
            }
        }
        p.rows.push(row);
    }
    p.validate().unwrap();
    p
}

