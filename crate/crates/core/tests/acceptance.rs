use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use num_traits::Signed;

use tangent_monad::affine_hopf::{self, AffineConfig};
use tangent_monad::algebras::{self, examples, AlgebraMap, SampleConfig};
use tangent_monad::flows::{self, TimeFunction, VectorField};
use tangent_monad::foliation::{self, LiftOptions};
use tangent_monad::jets::DomainBox;
use tangent_monad::kahler::{self, ComonadConfig};
use tangent_monad::linalg::MatrixQ;
use tangent_monad::monad::{self, Fit, LawConfig, T2Map};
use tangent_monad::sampling;
use tangent_monad::scalar::{int, rat};
use tangent_monad::{Backend, Error, Rational, Result};

struct Criterion {
    parts: Vec<(bool, String)>,
}

impl Criterion {
    fn new() -> Self {
        Criterion { parts: Vec::new() }
    }

    fn item(&mut self, ok: bool, what: impl Into<String>) {
        self.parts.push((ok, what.into()));
    }

    fn passed(&self) -> bool {
        self.parts.iter().all(|(ok, _)| *ok)
    }
}

fn passing_algebras() -> Result<Vec<AlgebraMap>> {
    let affine = algebras::make_affine(&MatrixQ::from_ints(&[&[0, 1], &[0, 0]]))?;
    Ok(vec![
        algebras::make_trivial(2)?,
        algebras::make_free(&DomainBox::cube(1, -2.0, 2.0))?,
        affine.clone(),
        algebras::make_product(&algebras::make_trivial(1)?, &algebras::make_free(&DomainBox::cube(1, -1.0, 1.0))?)?,
        examples::torus()?,
        examples::cylinder()?,
        flows::rotation_example()?,
        flows::radial_example()?,
    ])
}

fn c1() -> Result<Criterion> {
    let mut c = Criterion::new();
    for n in 1..=3 {
        let cfg = LawConfig::new(n, 200, 42, Backend::Rational);
        let r = monad::verify_monad_laws(&cfg, &monad::default_panel(n, Backend::Rational))?;
        let exact = r.checks.iter().all(|k| k.max_residual == 0.0);
        c.item(r.passed && exact, format!("rational dim {n}: {} checks exactly 0", r.checks.len()));
        let mut cfg = LawConfig::new(n, 200, 42, Backend::Float);
        cfg.tolerance = Some(1e-12);
        let r = monad::verify_monad_laws(&cfg, &monad::default_panel(n, Backend::Float))?;
        c.item(r.passed, format!("float dim {n} (sin/exp panel): max residual {:e} <= 1e-12", r.max_residual()));
    }
    Ok(c)
}

fn c2() -> Result<Criterion> {
    let mut c = Criterion::new();
    let fit = monad::fit_t2_to_t(&T2Map::mu(), 3, 50, 42)?;
    c.item(fit == Fit::Exact { a: int(1), b: int(1) }, format!("fit(mu) = {fit:?}"));
    let bad = T2Map::coordinatewise("vdot", |i| (format!("x{i}"), format!("v{i} + vd{i}")));
    let fit = monad::fit_t2_to_t(&bad, 3, 50, 42)?;
    c.item(matches!(fit, Fit::Mismatch { .. }), format!("v̇-dependent candidate: {fit:?}"));
    Ok(c)
}

fn c3() -> Result<Criterion> {
    let mut c = Criterion::new();
    for b in [int(0), int(1), rat(-3, 2)] {
        let w = monad::comonad_naturality_witness(&b)?;
        let gap = w.gap_exact.iter().map(|g| g.abs()).max().unwrap_or_default();
        c.item(gap == int(2), format!("b = {b}: gap {:?}", w.gap));
    }
    Ok(c)
}

fn c4() -> Result<Criterion> {
    let mut c = Criterion::new();
    let cfg = SampleConfig::new(200, 42);
    for h in passing_algebras()? {
        let r = algebras::check_axioms(&h, &cfg)?;
        let tol = match r.checks[0].backend {
            Backend::Rational => 0.0,
            Backend::Float => 1e-6,
        };
        let ok = r.passed && r.max_residual() <= tol;
        c.item(ok, format!("{}: axioms, max residual {:e} ({})", h.name(), r.max_residual(), r.checks[0].backend));
    }
    let id = algebras::make_affine(&MatrixQ::identity(2))?;
    let r = algebras::check_axioms(&id, &cfg)?;
    let action = r.check("action").expect("action check");
    c.item(!action.passed && action.max_residual >= 1.0, format!("affine(I): action residual {:e}", action.max_residual));
    Ok(c)
}

fn c5() -> Result<Criterion> {
    let mut c = Criterion::new();
    let cfg = SampleConfig::new(100, 42);
    for h in passing_algebras()? {
        let r = algebras::check_identities(&h, &cfg)?;
        let get = |n: &str| r.check(n).map_or(f64::NAN, |k| k.max_residual);
        let ok = r.passed
            && get("nilpotency") <= 1e-9
            && get("d_invariance") <= 1e-6
            && get("image_inclusion") <= 1e-6
            && r.check("rank_bound").is_some_and(|k| k.passed);
        c.item(
            ok,
            format!(
                "{}: |A²| {:e}, D-inv {:e}, image {:e}, ranks {}",
                h.name(),
                get("nilpotency"),
                get("d_invariance"),
                get("image_inclusion"),
                r.details["rank_profile"]
            ),
        );
    }
    Ok(c)
}

fn c6() -> Result<Criterion> {
    let mut c = Criterion::new();
    let cfg = SampleConfig::new(100, 42);
    for h in [examples::semi_affine_passing()?, examples::cylinder()?, examples::torus()?] {
        let k = algebras::check_nijenhuis(&h, &cfg)?;
        c.item(k.passed && k.max_residual <= 1e-9, format!("{}: |N_A| {:e}", h.name(), k.max_residual));
    }

    let designated = examples::nijenhuis_designated()?;
    let counter = examples::nijenhuis_counterexample()?;
    let mut rng = sampling::rng(42);
    let mut designated_max = 0.0f64;
    let mut counter_err = 0.0f64;
    for _ in 0..50 {
        let x = sampling::uniform_box(&mut rng, designated.domain());
        designated_max = designated_max.max(algebras::nijenhuis_norm(&algebras::nijenhuis_at(&designated, &x)?));
        let t = algebras::nijenhuis_at(&counter, &x)?;
        let mut expected = vec![vec![vec![0.0; 4]; 4]; 4];
        expected[2][3][1] = 1.0;
        expected[3][2][1] = -1.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    counter_err = counter_err.max((t[i][j][k] - expected[i][j][k]).abs());
                }
            }
        }
    }
    c.item(designated_max <= 1e-9, format!("designated field matches its oracle value 0: max |N_A| {designated_max:e}"));
    c.item(counter_err <= 1e-9, format!("counterexample E13 + x1·E24: N(e3,e4) = e2 within {counter_err:e}"));
    c.item(designated_max > 1e-9, format!("designated field yields a nonzero N_A (observed max {designated_max:e})"));
    Ok(c)
}

fn tame_points(h: &AlgebraMap, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = sampling::rng(seed);
    let mut out = Vec::new();
    let shrink = h.domain().clone();
    while out.len() < count {
        let x: Vec<f64> = sampling::uniform_box(&mut rng, &shrink)
            .iter()
            .zip(shrink.center())
            .map(|(xi, c)| c + 0.6 * (xi - c))
            .collect();
        let near: Vec<f64> = x.iter().map(|xi| xi + 1e-3).collect();
        if algebras::rank_at(h, &x)? == algebras::rank_at(h, &near)? {
            out.push(x);
        }
    }
    Ok(out)
}

fn c7() -> Result<Criterion> {
    let mut c = Criterion::new();
    let cfg = SampleConfig::new(100, 42);
    let opts = LiftOptions::default();
    for h in passing_algebras()? {
        let points = tame_points(&h, 5, 7)?;
        let radius = cfg.radius_fraction * h.domain().half_width();
        let mut dims_ok = true;
        for x in &points {
            let cloud = foliation::sample_leaf(&h, x, 40, radius, 42)?;
            dims_ok &= cloud.dimension == algebras::rank_at(&h, x)?;
        }
        let x = &points[0];
        let r = foliation::check_partition(&h, x, 100, &cfg, &opts)?;
        let rate = r.details["success_rate"].as_f64().unwrap_or(0.0);

        let mut rng = sampling::rng(11);
        let v = sampling::uniform_ball(&mut rng, h.dim(), radius);
        let lifted = foliation::lift_path(
            &h,
            x,
            |t| {
                let tv: Vec<f64> = v.iter().map(|vi| t * vi).collect();
                h.apply(x, &tv)
            },
            &opts,
        )?;
        let err = lifted.endpoint_error();
        c.item(
            dims_ok && r.passed && rate >= 0.99 && err <= 1e-6,
            format!("{}: leaf dim = rank at 5 points: {dims_ok}; transitivity {rate:.2}; lift error {err:e}", h.name()),
        );
    }
    Ok(c)
}

fn c8() -> Result<Criterion> {
    let mut c = Criterion::new();
    let opts = LiftOptions::default();
    let cyl = examples::cylinder()?;
    let hol = foliation::holonomy_linear_map(&cyl, &[0.5, 1.0], |t| Ok(vec![0.5, 1.0 + TAU * t]), &opts)?;
    c.item(foliation::check_eigenvalue_one(&hol.matrix(), 1e-6), format!("cylinder: eigenvalues {:?}", hol.eigenvalues));
    let rot = flows::rotation_example()?;
    let hol = foliation::holonomy_linear_map(&rot, &[1.0, 0.0], |t| Ok(vec![(TAU * t).cos(), (TAU * t).sin()]), &opts)?;
    c.item(foliation::check_eigenvalue_one(&hol.matrix(), 1e-6), format!("rotation: eigenvalues {:?}", hol.eigenvalues));
    Ok(c)
}

fn c9() -> Result<Criterion> {
    let mut c = Criterion::new();
    let cfg = AffineConfig { dim: 2, samples: 50, seed: 42 };
    let mut rng = sampling::rng(9);
    let mut tried = 0;
    let mut laws_ok = true;
    while tried < 10 {
        let a = sampling::grid_rational(sampling::uniform(&mut rng, -3.0, 3.0));
        let b = sampling::grid_rational(sampling::uniform(&mut rng, -3.0, 3.0));
        if (Rational::from_integer(1.into()) + &a * &b) == int(0) {
            continue;
        }
        tried += 1;
        laws_ok &= affine_hopf::verify_affine_laws(&a, &b, &cfg)?.passed && affine_hopf::verify_antipode(&a, &b, &cfg)?.passed;
    }
    c.item(laws_ok, "bimonad and antipode identities exactly 0 for 10 random (a, b)");

    let pairs = [(int(1), int(-1)), (int(2), rat(-1, 2)), (rat(-3, 4), rat(4, 3)), (int(1), int(1)), (int(0), int(5))];
    let mut iff = true;
    for (a, b) in &pairs {
        let degenerate = (int(1) + a * b) == int(0);
        let none = matches!(affine_hopf::antipode(a, b), Err(Error::NoAntipode));
        iff &= degenerate == none;
    }
    c.item(iff, "NoAntipode exactly when 1 + ab = 0");

    let ts: Vec<Rational> = (-12..=12).map(|k| rat(k, 4)).collect();
    let classes = [(int(0), int(1)), (int(0), int(0)), (int(1), int(-1)), (int(2), rat(-1, 2)), (int(2), int(3)), (rat(-1, 2), int(2))];
    let mut fam_ok = true;
    for (a, b) in &classes {
        fam_ok &= affine_hopf::verify_families(a, b, &ts)?.passed;
    }
    c.item(fam_ok, format!("every family passes for {} parameter values", ts.len()));

    let mut strays = 0;
    let mut solutions = 0;
    for (a, b) in &classes {
        let scan = affine_hopf::lattice_scan(a, b);
        strays += scan.unmatched.len();
        solutions += scan.solutions;
    }
    c.item(strays == 0, format!("lattice {{-2..2}}: {solutions} solutions, {strays} outside the families"));
    Ok(c)
}

fn c10() -> Result<Criterion> {
    let mut c = Criterion::new();
    for n in 1..=3 {
        let r = kahler::verify_comonad(&ComonadConfig::new(n))?;
        let laws = ["counit_zeta_t", "counit_t_zeta", "coassociativity", "mu_factorization"]
            .iter()
            .all(|k| r.check(k).is_some_and(|x| x.passed));
        c.item(laws, format!("n = {n}: counit and coassociativity identically zero"));
        let m = r.check("coaddition_multiplicative").expect("multiplicativity");
        c.item(m.passed && m.samples == 50, format!("n = {n}: coaddition multiplicative on {} random pairs", m.samples));
    }
    let mut rng = sampling::rng(10);
    let mut passing = 0;
    let mut vector_field = 0;
    for _ in 0..20 {
        let s = rat(rand::Rng::gen_range(&mut rng, -4..=4), rand::Rng::gen_range(&mut rng, 1..=3));
        let b = rat(rand::Rng::gen_range(&mut rng, -4..=4), rand::Rng::gen_range(&mut rng, 1..=3));
        let r = kahler::coalgebra_check(&kahler::affine_family(&s, &b), Some(&b))?;
        passing += usize::from(r.passed);
        vector_field += usize::from(r.check("vector_field").is_some_and(|k| k.passed));
    }
    c.item(
        passing == 20,
        format!("h(X) = X + (s + bX)dX: {passing}/20 scanned (s, b) satisfy Th∘h = μ∘h ({vector_field}/20 satisfy the chart condition)"),
    );
    Ok(c)
}

fn c11() -> Result<Criterion> {
    let mut c = Criterion::new();
    let cfg = SampleConfig::new(200, 42);
    let rot = flows::rotation_example()?;
    let r1 = rot.rank1().expect("flow algebra");
    let t = flows::check_time_axioms(r1.field(), r1.alpha(), &cfg)?;
    let b = flows::check_basic_form(r1.field(), r1.alpha(), &cfg)?;
    c.item(
        t.passed && b.passed && t.max_residual() <= 1e-6 && b.max_residual() <= 1e-6,
        format!("rotation: time axioms {:e}, basic form {:e}", t.max_residual(), b.max_residual()),
    );
    let bad = TimeFunction::scalar("-x2*v1 + x1*v2", r1.field().domain())?;
    let semibasic = flows::check_time_axioms(r1.field(), &bad, &cfg)?;
    let res = semibasic.check("semibasic").map_or(0.0, |k| k.max_residual);
    c.item(!semibasic.passed && res >= 0.1, format!("non-semibasic time function: residual {res:e}"));
    let push = VectorField::parse(&["1", "0"], DomainBox::cube(2, -1.0, 1.0))?;
    let dx = TimeFunction::one_form(&["1", "0"], push.domain())?;
    let basic = flows::check_basic_form(&push, &dx, &cfg)?;
    let res = basic.check("contraction").map_or(0.0, |k| k.max_residual);
    c.item(!basic.passed && res >= 0.1, format!("non-basic form dx along ∂x: contraction residual {res:e}"));
    Ok(c)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Criterion>); 11] = [
        ("monad laws", c1),
        ("uniqueness of the multiplication", c2),
        ("no-comonad witness", c3),
        ("algebra axioms", c4),
        ("derived identities", c5),
        ("Nijenhuis tensor", c6),
        ("foliation", c7),
        ("holonomy", c8),
        ("affine Hopf monads and modules", c9),
        ("Kähler comonad", c10),
        ("time functions and basic forms", c11),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, lines) = match run() {
            Ok(c) => (c.passed(), c.parts),
            Err(e) => (false, vec![(false, format!("error: {e}"))]),
        };
        println!("{} {:>2} {name} ({:.1}s)", if ok { "PASS" } else { "FAIL" }, k + 1, t.elapsed().as_secs_f64());
        for (ok, what) in lines {
            println!("       [{}] {what}", if ok { "ok" } else { "ko" });
        }
        failed += usize::from(!ok);
    }
    println!("acceptance: {}/{} criteria pass in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed == 0 || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
