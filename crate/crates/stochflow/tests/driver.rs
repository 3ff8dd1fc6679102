use std::fs;
use std::path::Path;

use stochflow::cli::main_with;
use stochflow::config::{ExperimentConfig, MethodKind, VelocityFlavor};
use stochflow::experiment::Experiment;
use stochflow::{precompute_global_library, relative_errors, QoIStats};
use stochflow_core::field::{realize_field, KLBasis};
use stochflow_core::hdmr::complexity_counts_with;
use stochflow_core::pressure::solve_singlephase_global;
use stochflow_core::sparsegrid::{build_sparse_grid, variance_from_grid};

fn small(n_terms: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.grid.fine = [12, 12];
    c.grid.coarse = [3, 3];
    c.covariance.corr_x = 0.3;
    c.covariance.corr_y = 0.3;
    c.kle.n_terms = n_terms;
    c.flow.dt_pvi = 0.05;
    c.flow.t_end_pvi = 0.5;
    c.flow.snapshots = vec![0.2, 0.5];
    c
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["stochflow"];
    argv.extend_from_slice(args);
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn counts_table() {
    let (code, out, _) = cli(&["counts", "--n", "80", "--j", "31", "--level", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("full,12961\n"), "{out}");
    assert!(out.contains("adaptive,6446\n"), "{out}");
    assert!(out.contains("hybrid,2231\n"), "{out}");
    let (code, _, err) = cli(&["counts", "--n", "4", "--j", "9"]);
    assert_eq!(code, 1);
    assert!(err.contains("j <= n"));
}

#[test]
fn bad_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    fs::write(&p, "[hdmr]\nzeta = 0.9\nlevels = 3\n").unwrap();
    let (code, _, err) = cli(&["run", "--config", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("levels") && err.contains("line 3"), "{err}");
    fs::write(&p, "[grid]\nfine = [10, 10]\ncoarse = [4, 4]\n").unwrap();
    let (code, _, err) = cli(&["run", "--config", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("grid.coarse"), "{err}");
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn runs_are_bit_identical_and_compare_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let mut c = small(4);
    c.run.cache_dir = Some(dir.path().join("cache"));
    fs::write(&cfg, c.to_toml().unwrap()).unwrap();
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let (code, _, err) = cli(&[
            "run",
            "--config",
            cfg,
            "--method",
            "g-ms-hybrid",
            "--workers",
            workers,
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    let fa = csv_files(&a);
    assert!(fa.iter().any(|f| f.0 == "sat_mean_0.5.csv"));
    assert!(fa.iter().any(|f| f.0 == "watercut_std.csv"));
    assert!(fa.iter().any(|f| f.0 == "sensitivity.csv"));
    assert_eq!(fa, csv_files(&b));

    let qa = a.join("stats.qoi");
    let errors = dir.path().join("errors.csv");
    let (code, out, _) = cli(&[
        "compare",
        qa.to_str().unwrap(),
        b.join("stats.qoi").to_str().unwrap(),
        "--out",
        errors.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("g-ms-hybrid,0.2,0.000000e0,0.000000e0,0.000000e0,0.000000e0"), "{out}");
    let table = fs::read_to_string(&errors).unwrap();
    assert!(table.starts_with("method,pvi,mean_saturation"));

    // the stats command re-exports the same tables
    let c2 = dir.path().join("c2");
    let (code, _, _) = cli(&["stats", qa.to_str().unwrap(), "--out", c2.to_str().unwrap(), "--vtk"]);
    assert_eq!(code, 0);
    let exported: Vec<_> = csv_files(&c2);
    for f in &exported {
        assert_eq!(Some(f), fa.iter().find(|g| g.0 == f.0));
    }
    assert!(c2.join("sat_0.2.vtk").exists());
}

#[test]
fn library_size_anchor_and_warm_cache() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(30);
    c.grid.fine = [9, 9];
    c.run.cache_dir = Some(dir.path().to_path_buf());
    let cold = precompute_global_library(&c).unwrap();
    assert_eq!(cold.solves(), 121);
    assert_eq!(cold.library().len(), 121);

    let klb = stochflow::library::build_klb(&c).unwrap();
    let grid = c.fine_grid().unwrap();
    let q = stochflow_core::pressure::Wells::quarter_five_spot(&grid, 1.0).source(&grid);
    let u0 = solve_singlephase_global(&grid, &realize_field(&klb, &[0.0; 30]).unwrap(), &q).unwrap();
    assert_eq!(cold.library().anchor_flux(), u0.flux.as_slice());

    let warm = precompute_global_library(&c).unwrap();
    assert_eq!(warm.solves(), 0);
    assert_eq!(warm.library(), cold.library());
}

#[test]
fn constant_permeability_has_no_spread() {
    let mut c = small(3);
    c.hdmr.order = 2;
    let grid = c.fine_grid().unwrap();
    let cells = grid.num_cells();
    let eigenfunctions: Vec<f64> = (0..3 * cells).map(|i| ((i % 7) as f64 - 3.0) / 10.0).collect();
    let klb = KLBasis::from_parts(grid, vec![0.0; 3], eigenfunctions, vec![0.5; cells], 1.0).unwrap();
    let mut e = Experiment::with_basis(c, klb).unwrap();
    let runs: Vec<QoIStats> = [
        MethodKind::MfemFull,
        MethodKind::LMsFull,
        MethodKind::GMsFull,
        MethodKind::LMsHybrid,
        MethodKind::GMsHybrid,
        MethodKind::LMsAdaptive,
        MethodKind::GMsAdaptive,
    ]
    .into_iter()
    .map(|m| e.run(m).unwrap())
    .collect();
    for r in &runs {
        let stds = r.std_saturation.iter().flatten().chain(&r.std_water_cut);
        assert!(stds.into_iter().all(|&s| s <= 1e-10), "{}", r.method);
        assert!(r.mean_water_cut.last().unwrap() > &0.0);
    }
    // each multiscale solver agrees with itself across reductions; the local
    // one differs from the fine solver by its discretisation error
    for r in [&runs[3], &runs[5]] {
        let err = relative_errors(&runs[1], r, 0.5).unwrap();
        assert!(err.mean_saturation <= 1e-8 && err.mean_water_cut <= 1e-8, "{}", r.method);
    }
    for r in [&runs[4], &runs[6]] {
        let err = relative_errors(&runs[2], r, 0.5).unwrap();
        assert!(err.mean_saturation <= 1e-8 && err.mean_water_cut <= 1e-8, "{}", r.method);
    }
    // with constant permeability global data reproduces the fine velocity
    let g = relative_errors(&runs[0], &runs[2], 0.5).unwrap();
    assert!(g.mean_saturation <= 1e-8, "{g:?}");
}

#[test]
fn full_statistics_match_direct_quadrature() {
    let c = small(3);
    let mut e = Experiment::new(c.clone()).unwrap();
    let stats = e.run(MethodKind::LMsFull).unwrap();
    let grid = build_sparse_grid(3, 2).unwrap();
    let setup = e.setup();
    let cells = setup.grid().num_cells();
    let runs: Vec<_> = grid
        .nodes()
        .map(|x| setup.simulate(VelocityFlavor::LocalMs, None, x).unwrap())
        .collect();
    for (k, _) in stats.snapshot_pvi.iter().enumerate() {
        for cell in (0..cells).step_by(7) {
            let vals: Vec<f64> = runs.iter().map(|r| r.snapshots[k].1[cell]).collect();
            let m = grid.quadrature(&vals).unwrap();
            let v = variance_from_grid(&grid, &vals).unwrap();
            assert!((stats.mean_saturation[k][cell] - m).abs() <= 1e-13);
            assert!((stats.std_saturation[k][cell] - v.value.sqrt()).abs() <= 1e-12);
        }
    }
    assert_eq!(stats.ledger.conventional, 25);
    assert_eq!(stats.ledger.flow_solves, 25);
}

#[test]
fn hdmr_ledgers_follow_the_counts() {
    let mut c = small(5);
    c.hdmr.zeta = 0.6;
    let mut e = Experiment::new(c.clone()).unwrap();
    let h = e.run(MethodKind::LMsHybrid).unwrap();
    let a = e.run(MethodKind::LMsAdaptive).unwrap();
    let j = h.active.as_ref().unwrap().len();
    assert!(j < 5);
    let counts = complexity_counts_with(5, j, 2, 2, a.ledger.order.unwrap());
    assert_eq!(h.ledger.conventional, counts.hybrid);
    assert_eq!(a.ledger.conventional, counts.adaptive);
    // the adaptive run reuses every flow output of the hybrid run
    assert_eq!(a.ledger.flow_solves, 0);
    let err = relative_errors(&h, &a, 0.5).unwrap();
    assert!(err.mean_saturation <= 1e-10, "{err:?}");
}

#[test]
fn error_split_is_measurable() {
    let c = small(3);
    let mut e = Experiment::new(c).unwrap();
    let reference = e.run(MethodKind::MfemFull).unwrap();
    let split = e.error_split(MethodKind::LMsHybrid, &reference, 0.5).unwrap();
    assert!(split.multiscale.mean_saturation > 0.0);
    assert!(split.reduction.mean_saturation >= 0.0);
    assert!(e.error_split(MethodKind::MfemFull, &reference, 0.5).is_err());
}
