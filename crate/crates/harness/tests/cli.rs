use std::path::Path;
use std::process::Command;

use epbm_core::stepper::{integrate, MethodConfig, Semilinear};
use epbm_core::{CVector, Complex64};
use epbm_harness::commands::{
    convergence_study, dump_coefficients, run_coeffs, run_stability_export, run_timing, unpartitioned_mask,
    SliceCoefficients,
};
use epbm_harness::config::{dividing_step, Ladder};
use epbm_harness::output::{from_csv_str, read_csv, to_csv_string, ConvergenceRecord};
use epbm_harness::ExperimentConfig;
use epbm_core::stability::{stability_slice, GridSpec};
use proptest::prelude::*;

fn epbm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_epbm"))
}

fn amax(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn small_stability(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        methods: vec!["epbm:q=4,alpha=2".into()],
        out: out.to_path_buf(),
        ..Default::default()
    };
    cfg.stability.radii = vec![0.0, 30.0];
    cfg.stability.directions = vec!["dissipative".into()];
    cfg.stability.n_re = 41;
    cfg.stability.n_im = 40;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(
        ("[a-z0-9:=,.-]{1,24}", 1e-8f64..10.0, prop_oneof![Just(f64::INFINITY), 0.0f64..1.0], 0.0f64..100.0, 1usize..64),
        0..12,
    )) {
        let records: Vec<ConvergenceRecord> = rows
            .into_iter()
            .map(|(method, h, error, wall_s, threads)| ConvergenceRecord { method, h, error, wall_s, threads })
            .collect();
        let meta = vec![("method".to_string(), "x".to_string()), ("config_sha256".to_string(), "ab".to_string())];
        let text = to_csv_string(&meta, &records).unwrap();
        let (m, back): (_, Vec<ConvergenceRecord>) = from_csv_str(&text).unwrap();
        prop_assert_eq!(m, meta);
        prop_assert_eq!(back, records);
    }
}

#[test]
fn config_toml_round_trip_and_hash() {
    let mut cfg = ExperimentConfig::default();
    cfg.methods.push("eab:p=2".into());
    cfg.t_final = Some(2.5);
    let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.hash(), cfg.hash());
    let mut moved = cfg.clone();
    moved.out = "elsewhere".into();
    assert_eq!(moved.hash(), cfg.hash());
    let mut other = cfg.clone();
    other.ladder.count = 6;
    assert_ne!(other.hash(), cfg.hash());
}

#[test]
fn config_validation() {
    let mut cfg = ExperimentConfig::default();
    cfg.ladder.ratio = 1.0;
    assert!(cfg.validate().is_err());
    let mut cfg = ExperimentConfig::default();
    cfg.threads = vec![0];
    assert!(cfg.validate().is_err());
    let mut cfg = ExperimentConfig::default();
    cfg.methods = vec!["epbm:alpha=2".into()];
    assert!(cfg.validate().is_err());
    assert!(ExperimentConfig::from_toml("problem = \"ks\"\nbogus = 1\n").is_err());
    assert_eq!(Ladder::parse("0.2,5,2").unwrap().rungs(10.0), vec![0.2, 0.1, 0.05, 0.025, 0.0125]);
    assert!(Ladder::parse("0.2,5").is_err());
    assert_eq!(dividing_step(10.0, 1e-4), 1e-4);
    let h = dividing_step(3.0, 0.7);
    assert!((3.0 / h - 5.0).abs() < 1e-12);
}

#[test]
fn identical_configs_give_identical_files() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let mut cfg = small_stability(d.path());
        cfg.methods.push("epbm:q=3,alpha=2".into());
        run_stability_export(&cfg).unwrap();
        run_coeffs(&cfg).unwrap();
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 6, "{names:?}");
    for n in names {
        let a = std::fs::read(dirs[0].path().join(&n)).unwrap();
        let b = std::fs::read(dirs[1].path().join(&n)).unwrap();
        assert!(a == b, "{n:?} differs");
    }
}

#[test]
fn exact_linear_problem_is_flagged_floor() {
    let diag = CVector::from_vec(vec![
        Complex64::new(-1.0, 0.0),
        Complex64::new(-30.0, 0.0),
        Complex64::new(-0.5, 4.0),
    ]);
    let prob = Semilinear::new(diag.clone(), |_, y: &CVector| CVector::zeros(y.len())).unwrap();
    let y0 = CVector::from_element(3, Complex64::new(1.0, 0.0));
    let exact = diag.map(|l| (l * 1.0).exp());
    let methods = [MethodConfig::epbm(4, 2.0), MethodConfig::Eab { p: 2 }];
    let (records, fits) = convergence_study(&methods, &[0.1, 0.05, 0.025, 0.0125], 1, |m, h| {
        integrate(&prob, m, &y0, 0.0, 1.0, h, 1).map(|o| amax(&(o.y - &exact)) / amax(&exact))
    })
    .unwrap();
    assert_eq!(records.len(), 8);
    assert!(records.iter().all(|r| r.error < 1e-13));
    for f in fits {
        assert!(f.floor && f.order.is_none(), "{f:?}");
    }
}

#[test]
fn divergence_is_recorded_per_rung() {
    let prob = Semilinear::new(CVector::from_element(1, Complex64::new(0.0, 0.0)), |_, y: &CVector| {
        y.map(|v| v * v)
    })
    .unwrap();
    let y0 = CVector::from_element(1, Complex64::new(10.0, 0.0));
    let (records, fits) = convergence_study(&[MethodConfig::epbm(2, 2.0)], &[0.5, 0.25], 1, |m, h| {
        integrate(&prob, m, &y0, 0.0, 20.0, h, 1).map(|o| amax(&o.y))
    })
    .unwrap();
    assert!(records.iter().all(|r| r.error.is_infinite()));
    assert_eq!(fits[0].order, None);
}

#[test]
fn coefficient_dump_rows() {
    let d = dump_coefficients(&"epbm-legendre:q=2,alpha=2".parse().unwrap()).unwrap();
    assert!(d.text.contains("v1: [0, 1]"), "{}", d.text);
    assert_eq!(d.reference_error, Some(0.0));
    let d = dump_coefficients(&"epbm-legendre:q=3,alpha=2".parse().unwrap()).unwrap();
    let v2: Vec<f64> = d.records.iter().filter(|r| r.output == 1 && r.nu == 2).map(|r| r.re).collect();
    let s = 3f64.sqrt() / 2.0;
    assert!((v2[1] + s).abs() < 1e-14 && (v2[2] - s).abs() < 1e-14 && v2[0] == 0.0);
    assert!(d.reference_error.unwrap() < 1e-13);
    let d = dump_coefficients(&"epbm-legendre:q=4,alpha=2".parse().unwrap()).unwrap();
    assert!(d.reference_error.unwrap() < 1e-13);
    for q in 5..=8 {
        let d = dump_coefficients(&format!("epbm-legendre:q={q},alpha=2").parse().unwrap()).unwrap();
        assert_eq!(d.reference_error, None);
        assert!(d.sum_rule_error < 1e-9, "q={q}: {}", d.sum_rule_error);
    }
}

#[test]
fn stability_export_dissipative_slices() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_stability(dir.path());
    let s = run_stability_export(&cfg).unwrap();
    assert_eq!(s.len(), 2);
    for slice in &s {
        assert!(slice.stable_points > 0, "{slice:?}");
        assert_eq!(slice.failures, 0);
        let (meta, rows): (_, Vec<epbm_harness::commands::StabilityPoint>) =
            read_csv(&dir.path().join(&slice.file)).unwrap();
        assert_eq!(rows.len(), 41 * 40);
        assert_eq!(rows.iter().filter(|p| p.stable == 1).count(), slice.stable_points);
        assert!(meta.iter().any(|(k, v)| k == "failures" && v == "0"));
    }
    let (_, index): (_, Vec<epbm_harness::commands::SliceSummary>) =
        read_csv(&dir.path().join("stability_index.csv")).unwrap();
    assert_eq!(index, s);
}

#[test]
fn eab8_oscillatory_region_is_much_smaller() {
    let grid = GridSpec::new((-0.25, 0.025), (-0.25, 0.25), 60, 60).unwrap();
    let z1 = Complex64::new(0.0, 3.0);
    let area = |m: &str| {
        let c = SliceCoefficients::new(&m.parse().unwrap()).unwrap();
        stability_slice(c.slice_method(), z1, c.alpha, grid, 1e-10).unwrap().stable_count()
    };
    let (eab, epbm) = (area("eab:p=8"), area("epbm:q=8,alpha=2"));
    assert!(epbm > 0);
    assert!(10 * eab < epbm, "eab {eab} epbm {epbm}");
}

#[test]
fn unpartitioned_mask_is_left_half_plane() {
    let grid = GridSpec::new((-3.0, 3.0), (-3.0, 3.0), 25, 24).unwrap();
    let mask = unpartitioned_mask(&"epbm:q=4,alpha=2,kappa=1".parse().unwrap(), &grid, 1e-10).unwrap();
    let re = grid.re_values();
    for row in &mask {
        for (j, s) in row.iter().enumerate() {
            assert_eq!(*s, re[j] <= 0.0, "re {}", re[j]);
        }
    }
}

#[test]
fn timing_checksums_and_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        problem: "ks".into(),
        resolution: Some(128),
        t_final: Some(1.0),
        methods: vec!["epbm:q=4,alpha=2".into(), "eab:p=2".into()],
        threads: vec![1, 1, 4],
        h: Some(0.05),
        out: dir.path().to_path_buf(),
        ..Default::default()
    };
    let out = run_timing(&cfg).unwrap();
    assert_eq!(out.records.len(), 6);
    for m in ["epbm-legendre:q=4,alpha=2,kappa=0", "eab:p=2"] {
        let sums: Vec<_> = out.records.iter().filter(|r| r.method == m).map(|r| &r.checksum).collect();
        assert!(sums.iter().all(|s| *s == sums[0]));
    }
    assert_eq!(out.warnings.len(), 1);
    assert!(out.warnings[0].starts_with("eab:p=2"));
    assert!(dir.path().join("timing.csv").exists());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let st = epbm().args(["coeffs", "--method", "epbm:q=3", "--out", out]).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&st.stdout).contains("v2: [0, -0.8660254037844386, 0.8660254037844386]"));

    let st = epbm().args(["converge", "--method", "nope", "--out", out]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = epbm().args(["solve", "--problem", "heat", "--out", out]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = epbm().args(["solve", "--problem", "ks", "--h", "0.3", "--out", out]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));

    let st = epbm()
        .args(["solve", "--problem", "kdv", "--t-final", "20", "--h", "0.1", "--method", "epbm:q=4", "--out", out])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&st.stderr).contains("diverged at step"));

    let cfg_path = dir.path().join("exp.toml");
    std::fs::write(&cfg_path, "problem = \"kdv\"\nmethods = [\"epbm:q=2\"]\nt_final = 0.1\nh = 0.01\n").unwrap();
    let st = epbm()
        .args(["solve", "--config", cfg_path.to_str().unwrap(), "--out", out])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let (meta, rows): (_, Vec<epbm_harness::commands::StateRecord>) =
        read_csv(&dir.path().join("solve_epbm_legendre_q_2_alpha_2_kappa_0.csv")).unwrap();
    assert_eq!(rows.len(), 256);
    assert!(meta.iter().any(|(k, v)| k == "h" && v == "0.01"));
}
