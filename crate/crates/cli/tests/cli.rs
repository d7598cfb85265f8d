use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dpgmg"))
}

#[test]
fn selftest_exits_zero() {
    let out = bin().arg("selftest").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn missing_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["h-study", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["h-study", "--config"]).arg(dir.path().join("absent.cfg")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "study = uniform_h\ntol = 2.0\n").unwrap();
    let out = bin().args(["h-study", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tol"));
    fs::write(&cfg, "study = uniform_p\n").unwrap();
    let out = bin().args(["h-study", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_exits_two() {
    let out = bin().arg("selftest").env("DPGMG_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn two_grid_h_study_writes_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h.cfg");
    fs::write(&cfg, "study = uniform_h\nomega = 6.283185307179586\nload = plane_wave\ngrids = 2\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["h-study", "--vtk", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .env("DPGMG_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("h_study.csv")).unwrap();
    let rows = dpgmg::io::parse_csv(&csv).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].ndof, 8);
    let vtk = fs::read_to_string(out_dir.join("h_study_grid1.vtk")).unwrap();
    assert_eq!(dpgmg::io::parse_vtk(&vtk).unwrap().cells.len(), 4 * 16);
}

#[test]
fn omega_sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    fs::write(&cfg, "study = uniform_h\nomegas = 3, 6, 12\ngrids = 2\nload = plane_wave\n").unwrap();
    let out = bin().args(["omega-sweep", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("slope"));
}

#[test]
fn shipped_configs_parse() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for e in fs::read_dir(root).unwrap() {
        let p = e.unwrap().path();
        let cfg = dpgmg::io::parse_config(&p).unwrap_or_else(|err| panic!("{}: {err}", p.display()));
        cfg.validate().unwrap();
    }
}
