//! Acceptance run: ten criteria, one PASS/FAIL line each. Exits nonzero if
//! any criterion fails.

mod common;

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use common::richardson::quad_study;
use polyflex::binvariant::{positivity_certificate, second_fundamental_form_check};
use polyflex::deformation::{isometric_deformation_space, angle_sum_residual};
use polyflex::geometry::{distance, triangle_laws, Geometry, Vec3};
use polyflex::hull::{cube, icosahedron, random_sphere_hull, tetrahedron};
use polyflex::isoperimetric::{
    area_hessian, area_second_difference, classify_locus, is_critical, sample_isometric_competitors,
    solve_max_area, CriticalSolution, LocusKind,
};
use polyflex::metrics::{
    area_form_signature, barycenter, convergence_experiment, in_dual_interior, moduli_metric, BarycenterKind,
};
use polyflex::random::{convex_plane_points, instance_rng, random_convex_polygon, random_generic_polygon};
use polyflex::rigidity::rigidity_verdict;
use polyflex::{Error, Polygon};

const SEED: u64 = 20240601;

struct Outcome {
    id: usize,
    title: &'static str,
    pass: bool,
    detail: String,
    secs: f64,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

fn max(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

const GEOMETRIES: [Geometry; 4] = [Geometry::E2, Geometry::S2, Geometry::H2, Geometry::DS2];
const CURVED: [Geometry; 3] = [Geometry::S2, Geometry::H2, Geometry::DS2];

/// `count` polygons per geometry with `n` cycling through 4..=8.
fn sizes(count: usize) -> impl ParallelIterator<Item = (usize, usize)> {
    (0..count).into_par_iter().map(|i| (i, 4 + i % 5))
}

struct CorpusEntry {
    n: usize,
    residual: f64,
    quotient_dim: usize,
    gap_ratio: f64,
    error: bool,
}

fn corpus() -> Vec<CorpusEntry> {
    GEOMETRIES
        .iter()
        .enumerate()
        .flat_map(|(gi, &g)| {
            sizes(1000)
                .map(|(i, n)| {
                    let p = random_generic_polygon(g, n, &mut instance_rng(SEED + gi as u64, i as u64));
                    let Ok(space) = isometric_deformation_space(&p) else {
                        return CorpusEntry { n, residual: f64::INFINITY, quotient_dim: 0, gap_ratio: 0.0, error: true };
                    };
                    let mut residual: f64 = 0.0;
                    let mut error = false;
                    for j in 0..space.full_dim() {
                        match angle_sum_residual(&p, &space.full_vector(j)) {
                            Ok((a, b)) => residual = residual.max(a).max(b),
                            Err(_) => error = true,
                        }
                    }
                    CorpusEntry { n, residual, quotient_dim: space.quotient_dim(), gap_ratio: space.gap_ratio, error }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn criteria_1_2() -> [Outcome; 2] {
    let (c, secs) = timed(corpus);
    let worst = max(c.iter().map(|e| e.residual));
    let errors = c.iter().filter(|e| e.error).count();
    let c1 = Outcome {
        id: 1,
        title: "angle-sum identity on kernel vectors",
        pass: errors == 0 && worst < 1e-9 && secs < 30.0,
        detail: format!("{} polygons, max residual {worst:.2e} (< 1e-9), errors {errors}", c.len()),
        secs,
    };
    let dim_ok = c.iter().filter(|e| !e.error && e.quotient_dim + 3 == e.n).count();
    let min_gap = c.iter().map(|e| e.gap_ratio).fold(f64::INFINITY, f64::min);
    let c2 = Outcome {
        id: 2,
        title: "quotient dimension n - 3",
        pass: dim_ok == c.len() && min_gap > 1e6,
        detail: format!("{dim_ok}/{} with dimension n-3, min gap ratio {min_gap:.2e} (> 1e6)", c.len()),
        secs: 0.0,
    };
    [c1, c2]
}

fn criterion_3() -> Outcome {
    let (r, secs) = timed(|| {
        let s = quad_study(Geometry::S2, SEED, 100);
        let h = quad_study(Geometry::H2, SEED + 1, 100);
        let lemma: Vec<(f64, bool)> = CURVED
            .iter()
            .enumerate()
            .flat_map(|(gi, &g)| {
                sizes(200)
                    .map(|(i, n)| {
                        let mut r = instance_rng(SEED + 30 + gi as u64, i as u64);
                        let p = random_convex_polygon(g, n, &mut r);
                        let space = isometric_deformation_space(&p).unwrap();
                        let c: Vec<f64> = (0..space.quotient_dim()).map(|_| r.random_range(-1.0..1.0)).collect();
                        match positivity_certificate(&p, &space.combine(&c)) {
                            Ok(rep) => (rep.closed_form_mismatch, true),
                            Err(_) => (f64::INFINITY, false),
                        }
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        (s, h, lemma)
    });
    let (s, h, lemma) = r;
    let ratio_dev = s.max_ratio_deviation.max(h.max_ratio_deviation);
    let closed = s.max_closed_form_error.max(h.max_closed_form_error);
    let lemma_err = max(lemma.iter().map(|x| x.0));
    let lemma_ok = lemma.iter().all(|x| x.1);
    Outcome {
        id: 3,
        title: "quadrilateral derivative formulas",
        pass: ratio_dev < 0.5 && closed < 1e-9 && lemma_ok && lemma_err < 1e-9 && s.ratios > 0 && h.ratios > 0,
        detail: format!(
            "Richardson |ratio-4| max {ratio_dev:.3} (< 0.5) over {} ratios, extrapolated vs closed {closed:.2e}; \
             b-pairing vs closed form {lemma_err:.2e} (< 1e-9) on {} polygons",
            s.ratios + h.ratios,
            lemma.len()
        ),
        secs,
    }
}

fn criterion_4() -> Outcome {
    let (r, secs) = timed(|| {
        CURVED
            .iter()
            .enumerate()
            .flat_map(|(gi, &g)| {
                sizes(1000)
                    .map(|(i, n)| {
                        let p = random_convex_polygon(g, n, &mut instance_rng(SEED + 40 + gi as u64, i as u64));
                        let space = isometric_deformation_space(&p).unwrap();
                        let mut worst = f64::INFINITY;
                        for u in space.quotient_vectors() {
                            match positivity_certificate(&p, &u) {
                                Ok(rep) => worst = worst.min(rep.min_product),
                                Err(_) => worst = f64::NEG_INFINITY,
                            }
                        }
                        worst
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<f64>>()
    });
    let failures = r.iter().filter(|m| !(**m > 0.0)).count();
    let min = r.iter().copied().fold(f64::INFINITY, f64::min);
    Outcome {
        id: 4,
        title: "positivity of b on convex polygons (S2, H2, DS2)",
        pass: failures == 0 && secs < 60.0,
        detail: format!("{} polygons, {failures} failures, smallest <b(U), v_j> {min:.2e}", r.len()),
        secs,
    }
}

/// Case of the quadrilateral `(v_0, v_1, v_i, v_{i+1})`: whether `d(v_1, v_i)`
/// and `d(v_0, v_{i+1})` are real.
fn ds_case(p: &Polygon, i: usize) -> Option<usize> {
    let v = p.vertices();
    let d1 = distance(Geometry::DS2, &v[1], &v[i]).ok()?;
    let d0 = distance(Geometry::DS2, &v[0], &v[i + 1]).ok()?;
    Some(match (d1.is_real(), d0.is_real()) {
        (true, true) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (false, false) => 3,
    })
}

fn criterion_5() -> Outcome {
    let (r, secs) = timed(|| {
        (0..300)
            .into_par_iter()
            .map(|k| {
                let mut rng = instance_rng(SEED + 50, k);
                let n = rng.random_range(5..=9);
                let p = random_convex_polygon(Geometry::DS2, n, &mut rng);
                let v = p.vertices();
                let mut out = Vec::new();
                for i in 2..n - 1 {
                    let case = ds_case(&p, i);
                    for (a, b, c) in [(0, 1, i), (0, 1, i + 1), (1, i, i + 1), (0, i, i + 1)] {
                        let res = triangle_laws(Geometry::DS2, &v[a], &v[b], &v[c]).map(|t| t.max());
                        out.push((case, res.unwrap_or(f64::INFINITY)));
                    }
                }
                out
            })
            .flatten()
            .collect::<Vec<_>>()
    });
    let mut cases = [0usize; 4];
    for (c, _) in &r {
        if let Some(c) = c {
            cases[*c] += 1;
        }
    }
    let worst = max(r.iter().map(|x| x.1));
    let unclassified = r.iter().filter(|x| x.0.is_none()).count();
    Outcome {
        id: 5,
        title: "de Sitter cosine and sine laws",
        pass: r.len() >= 1000 && worst < 1e-10 && cases.iter().all(|&c| c > 0) && unclassified == 0,
        detail: format!("{} triangles, max residual {worst:.2e} (< 1e-10), triangles per case {cases:?}", r.len()),
        secs,
    }
}

/// Random hyperbolic edge lengths whose locus is `kind`.
fn h2_lengths(kind: LocusKind, r: &mut impl Rng) -> Vec<f64> {
    loop {
        // triangles have no isometric competitors
        let n = r.random_range(4..=7);
        let rest: Vec<f64> = (1..n).map(|_| r.random_range(0.2..1.5)).collect();
        let ss: Vec<f64> = rest.iter().map(|l| (l / 2.0).sinh()).collect();
        let sum: f64 = ss.iter().sum();
        let top = ss.iter().copied().fold(0.0, f64::max);
        let s1 = match kind {
            LocusKind::Circle => {
                let lo = top.max(0.3 * sum);
                if lo >= 0.97 * sum {
                    continue;
                }
                r.random_range(lo..0.97 * sum)
            }
            LocusKind::Horocycle => sum,
            LocusKind::Equidistant => sum * r.random_range(1.02..1.6),
        };
        let mut l = vec![2.0 * s1.asinh()];
        l.extend(rest);
        l.rotate_left(r.random_range(0..n));
        match classify_locus(&l, Geometry::H2) {
            Ok(c) if c.kind == kind => {}
            _ => continue,
        }
        match solve_max_area(&l, Geometry::H2) {
            Err(Error::Infeasible(_)) => continue,
            _ => return l,
        }
    }
}

struct Solved {
    lengths: Vec<f64>,
    kind: LocusKind,
    sol: Result<CriticalSolution, Error>,
}

fn solve_corpus() -> Vec<Solved> {
    const KINDS: [LocusKind; 3] = [LocusKind::Circle, LocusKind::Horocycle, LocusKind::Equidistant];
    (0..200)
        .into_par_iter()
        .map(|i| {
            let kind = KINDS[i % 3];
            let lengths = h2_lengths(kind, &mut instance_rng(SEED + 60, i as u64));
            let sol = solve_max_area(&lengths, Geometry::H2);
            Solved { lengths, kind, sol }
        })
        .collect()
}

fn criterion_6(corpus: &[Solved]) -> Outcome {
    let (r, secs) = timed(|| {
        corpus
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let Ok(sol) = &s.sol else { return (f64::INFINITY, f64::INFINITY, usize::MAX, false, 0) };
                let got = sol.polygon.real_edge_lengths().unwrap();
                let len_err = max(got.iter().zip(&s.lengths).map(|(a, b)| (a - b).abs()));
                let crit = is_critical(&sol.polygon).map(|w| if w.critical { w.residual } else { f64::INFINITY });
                let comps = sample_isometric_competitors(&sol.polygon, 200, SEED + i as u64).unwrap_or_default();
                let violations = comps.iter().filter(|q| q.area().unwrap() > sol.area + 1e-8).count();
                let consistent = sol.locus.kind() == s.kind && comps.len() == 200;
                (len_err, crit.unwrap_or(f64::INFINITY), violations, consistent, comps.len())
            })
            .collect::<Vec<_>>()
    });
    let mut kinds = [0usize; 3];
    for s in corpus {
        kinds[s.kind as usize] += 1;
    }
    let len_err = max(r.iter().map(|x| x.0));
    let crit = max(r.iter().map(|x| x.1));
    let violations: usize = r.iter().map(|x| x.2).sum();
    let consistent = r.iter().all(|x| x.3);
    let competitors: usize = r.iter().map(|x| x.4).sum();
    Outcome {
        id: 6,
        title: "maximal-area solver in H2",
        pass: len_err < 1e-9 && crit < 1e-9 && violations == 0 && consistent && kinds.iter().all(|&k| k > 0),
        detail: format!(
            "{} length vectors (circle/horocycle/equidistant {kinds:?}), length error {len_err:.2e}, \
             criticality {crit:.2e}, area violations {violations} of {competitors} competitors",
            corpus.len()
        ),
        secs,
    }
}

fn criterion_7(corpus: &[Solved]) -> Outcome {
    let (r, secs) = timed(|| {
        let mut polys: Vec<Polygon> =
            corpus.iter().filter_map(|s| s.sol.as_ref().ok()).map(|s| s.polygon.clone()).collect();
        let spherical: Vec<Polygon> = (0..100)
            .into_par_iter()
            .filter_map(|i| {
                let mut r = instance_rng(SEED + 70, i);
                let n = r.random_range(3..=7);
                let l = random_convex_polygon(Geometry::S2, n, &mut r).real_edge_lengths().ok()?;
                solve_max_area(&l, Geometry::S2).ok().map(|s| s.polygon)
            })
            .collect();
        polys.extend(spherical);
        polys
            .par_iter()
            .enumerate()
            .filter_map(|(i, p)| {
                let h = area_hessian(p).ok()?;
                if !h.center_inside || h.eigenvalues.is_empty() {
                    return None;
                }
                let space = isometric_deformation_space(p).ok()?;
                let mut r = instance_rng(SEED + 71, i as u64);
                let c: Vec<f64> = (0..space.quotient_dim()).map(|_| r.random_range(-1.0..1.0)).collect();
                let mut fd_err: f64 = 0.0;
                let mut dirs: Vec<Vec<f64>> = (0..c.len())
                    .map(|j| (0..c.len()).map(|k| if k == j { 1.0 } else { 0.0 }).collect())
                    .collect();
                dirs.push(c);
                for d in dirs {
                    let exact: f64 = (0..d.len()).map(|a| (0..d.len()).map(|b| d[a] * h.matrix[a][b] * d[b]).sum::<f64>()).sum();
                    let fd = area_second_difference(p, &space.combine(&d), 1e-3).ok()?;
                    fd_err = fd_err.max((fd - exact).abs());
                }
                Some((h.eigenvalues.last().copied().unwrap(), fd_err, p.geometry() == Geometry::S2))
            })
            .collect::<Vec<_>>()
    });
    let top = r.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
    let fd = max(r.iter().map(|x| x.1));
    let s2 = r.iter().filter(|x| x.2).count();
    Outcome {
        id: 7,
        title: "area Hessian is negative definite at critical polygons with interior center",
        pass: r.len() >= 50 && s2 > 0 && top < -1e-10 && fd < 1e-5,
        detail: format!(
            "{} polygons ({s2} spherical), largest eigenvalue {top:.2e} (< -1e-10), second difference error {fd:.2e} (< 1e-5)",
            r.len()
        ),
        secs,
    }
}

fn criterion_8() -> Outcome {
    let (r, secs) = timed(|| {
        let mut solids = vec![tetrahedron(), cube(), icosahedron()];
        let random: Vec<_> = (0..500)
            .into_par_iter()
            .map(|i| {
                let mut r = instance_rng(SEED + 80, i);
                let n = r.random_range(8..=40);
                random_sphere_hull(n, &mut r)
            })
            .collect();
        solids.extend(random);
        solids
            .par_iter()
            .map(|p| rigidity_verdict(p).map(|rep| (rep.quotient_dim, rep.flex_dim, rep.trivial_residual, rep.global_sum)))
            .collect::<Vec<_>>()
    });
    let errors = r.iter().filter(|x| x.is_err()).count();
    let ok: Vec<_> = r.iter().filter_map(|x| x.as_ref().ok()).collect();
    let rigid = ok.iter().filter(|x| x.0 == 0 && x.1 == 6).count();
    let triv = max(ok.iter().map(|x| x.2));
    let sum = max(ok.iter().map(|x| x.3));
    Outcome {
        id: 8,
        title: "infinitesimal rigidity of convex polyhedra",
        pass: errors == 0 && rigid == r.len() && triv < 1e-10 && sum < 1e-8 && secs < 300.0,
        detail: format!(
            "{rigid}/{} rigid, trivial residual {triv:.2e} (< 1e-10), global sum {sum:.2e} (< 1e-8), errors {errors}",
            r.len()
        ),
        secs,
    }
}

fn criterion_9() -> Outcome {
    let (r, secs) = timed(|| {
        (0..100)
            .into_par_iter()
            .map(|i| {
                let mut r = instance_rng(SEED + 90, i);
                let p = random_convex_polygon(Geometry::S2, 5, &mut r);
                let space = isometric_deformation_space(&p).unwrap();
                let c: Vec<f64> = (0..space.quotient_dim()).map(|_| r.random_range(-1.0..1.0)).collect();
                let u = space.combine(&c);
                let u = u.scaled(1.0 / space.quotient_coordinates(&u).norm());
                second_fundamental_form_check(&p, &u, 1e-4).unwrap_or(f64::INFINITY)
            })
            .collect::<Vec<_>>()
    });
    let worst = max(r.iter().copied());
    Outcome {
        id: 9,
        title: "second fundamental form identity on spherical pentagons",
        pass: worst < 1e-5,
        detail: format!("{} pentagons, max residual {worst:.2e} (< 1e-5)", r.len()),
        secs,
    }
}

fn criterion_10() -> Outcome {
    let (r, secs) = timed(|| {
        let grams: Vec<f64> = (0..500)
            .into_par_iter()
            .map(|i| {
                let mut r = instance_rng(SEED + 100, i);
                let g = if i % 2 == 0 { Geometry::S2 } else { Geometry::H2 };
                let p = random_convex_polygon(g, 4 + (i as usize / 2) % 5, &mut r);
                let mut m = f64::INFINITY;
                for k in BarycenterKind::ALL {
                    m = m.min(moduli_metric(&p, k).map(|s| s.eigenvalues[0]).unwrap_or(f64::NEG_INFINITY));
                }
                m
            })
            .collect();
        let signatures: Vec<bool> = (0..100)
            .into_par_iter()
            .map(|i| {
                let n = 4 + i as usize % 5;
                let pts = convex_plane_points(n, &mut instance_rng(SEED + 101, i));
                let q = Polygon::euclidean(&pts).unwrap();
                let x0 = q.vertices().iter().sum::<Vec3>() / n as f64;
                area_form_signature(&q, &x0).map(|s| s.positive == 1 && s.negative == n - 3).unwrap_or(false)
            })
            .collect();
        let alpha = vec![std::f64::consts::TAU / 5.0; 5];
        let table = convergence_experiment(&alpha, &[4, 8, 16, 32, 64], 0, SEED).unwrap();
        let contained: Vec<bool> = (0..1000)
            .into_par_iter()
            .map(|i| {
                let mut r = instance_rng(SEED + 102, i);
                let n = r.random_range(3..=8);
                let p = random_convex_polygon(Geometry::S2, n, &mut r);
                barycenter(&p, BarycenterKind::Interior).and_then(|c| in_dual_interior(&p, &c)).unwrap_or(false)
            })
            .collect();
        (grams, signatures, table, contained)
    });
    let (grams, signatures, table, contained) = r;
    let min_eig = grams.iter().copied().fold(f64::INFINITY, f64::min);
    let sig_ok = signatures.iter().filter(|s| **s).count();
    let rises = table.windows(2).filter(|w| w[1].discrepancy >= w[0].discrepancy).count();
    let inside = contained.iter().filter(|c| **c).count();
    let disc: Vec<String> = table.iter().map(|r| format!("{}:{:.4}", r.k, r.discrepancy)).collect();
    Outcome {
        id: 10,
        title: "moduli metrics and convergence",
        pass: min_eig > 0.0
            && sig_ok == signatures.len()
            && rises <= 1
            && table.first().unwrap().discrepancy > table.last().unwrap().discrepancy
            && inside == contained.len()
            && secs < 120.0,
        detail: format!(
            "min gram eigenvalue {min_eig:.2e} over {}x4 grams; signature (1,n-3) {sig_ok}/{}; \
             discrepancy [{}] with {rises} rises; interior barycenter in dual {inside}/{}",
            grams.len(),
            signatures.len(),
            disc.join(" "),
            contained.len()
        ),
        secs,
    }
}

fn main() {
    let start = Instant::now();
    let mut out: Vec<Outcome> = Vec::new();
    let mut report = |o: Outcome| {
        println!(
            "criterion {:>2} {}: {} ({:.1}s) {}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.title,
            o.secs,
            o.detail
        );
        out.push(o);
    };
    let [c1, c2] = criteria_1_2();
    report(c1);
    report(c2);
    report(criterion_3());
    report(criterion_4());
    report(criterion_5());
    let (solved, solve_secs) = timed(solve_corpus);
    let mut c6 = criterion_6(&solved);
    c6.secs += solve_secs;
    report(c6);
    report(criterion_7(&solved));
    report(criterion_8());
    report(criterion_9());
    report(criterion_10());
    let failed = out.iter().filter(|o| !o.pass).count();
    println!("acceptance: {}/{} passed in {:.1}s", out.len() - failed, out.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
