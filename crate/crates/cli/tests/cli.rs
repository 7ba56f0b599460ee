use std::path::PathBuf;
use std::process::Command;

fn ppsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ppsim"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("ppsim-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn sample_is_bit_identical_across_runs() {
    let out1 = tmp("a1.ppc");
    let out2 = tmp("a2.ppc");
    for out in [&out1, &out2] {
        let status = ppsim()
            .args([
                "sample",
                "--space",
                "torus2:10",
                "--process",
                "poisson:1",
                "--seed",
                "42",
                "--out",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "same flags and seed must give byte-identical output");
    assert!(String::from_utf8_lossy(&a).starts_with("PPC1 torus2:10 marked=0"));
    std::fs::remove_file(out1).ok();
    std::fs::remove_file(out2).ok();
}

#[test]
fn wobble_of_file_with_itself_is_zero() {
    let out = tmp("w.ppc");
    assert!(ppsim()
        .args(["sample", "--space", "torus2:10", "--seed", "5", "--out"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let res = ppsim()
        .args(["wobble"])
        .arg(&out)
        .arg(&out)
        .args(["--radius", "3"])
        .output()
        .unwrap();
    assert!(res.status.success());
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.starts_with("feasible,eps,R,n_a,n_b"));
    assert!(text.lines().nth(1).unwrap().starts_with("true,0"));
    std::fs::remove_file(out).ok();
}

#[test]
fn render_produces_svg() {
    let ppc = tmp("r.ppc");
    let svg = tmp("r.svg");
    assert!(ppsim()
        .args([
            "sample",
            "--space",
            "torus2:10",
            "--process",
            "poisson:1|mark",
            "--seed",
            "9",
            "--out"
        ])
        .arg(&ppc)
        .status()
        .unwrap()
        .success());
    assert!(ppsim()
        .args(["render"])
        .arg(&ppc)
        .args(["--graph", "dist:2", "--out"])
        .arg(&svg)
        .status()
        .unwrap()
        .success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.contains("<circle"));
    assert!(text.contains("<line"));
    assert!(text.trim_end().ends_with("</svg>"));
    std::fs::remove_file(ppc).ok();
    std::fs::remove_file(svg).ok();
}

#[test]
fn verify_assert_exit_codes() {
    // a verifier under --assert exits 0 when the threshold holds
    let ok = ppsim()
        .args([
            "verify",
            "mecke",
            "--space",
            "torus2:20",
            "--t",
            "1",
            "--replicas",
            "500",
            "--seed",
            "7",
            "--assert",
        ])
        .output()
        .unwrap();
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    // separating two different Poisson intensities under expect=same fails
    // the acceptance with exit code 3
    let fail = ppsim()
        .args([
            "fdd",
            "--space",
            "torus2:10",
            "--process-a",
            "poisson:1",
            "--process-b",
            "poisson:1.5",
            "--replicas",
            "3000",
            "--seed-a",
            "1",
            "--seed-b",
            "2",
            "--assert",
            "--expect",
            "same",
        ])
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(3));
}

#[test]
fn precondition_errors_exit_two() {
    let bad = ppsim()
        .args(["sample", "--space", "torus2:-4", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let bad2 = ppsim().args(["verify", "nonsense"]).output().unwrap();
    assert_eq!(bad2.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let cfg = tmp("exp.cfg");
    std::fs::write(
        &cfg,
        "space=torus2:10\nprocess=poisson:1\nseed=7\nreplica=0\n",
    )
    .unwrap();
    let from_file = ppsim()
        .args(["sample", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(from_file.status.success());
    let text = String::from_utf8_lossy(&from_file.stdout);
    assert!(text.starts_with("PPC1 torus2:10"));
    // a flag overrides the file value
    let overridden = ppsim()
        .args(["sample", "--space", "torus1:20", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&overridden.stdout).starts_with("PPC1 torus1:20"));
    std::fs::remove_file(cfg).ok();
}

#[test]
fn env_seed_is_used_when_flag_absent() {
    let a = ppsim()
        .args(["sample", "--space", "torus2:10"])
        .env("PPSIM_SEED", "12345")
        .output()
        .unwrap();
    let b = ppsim()
        .args(["sample", "--space", "torus2:10", "--seed", "12345"])
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn cost_csv_schema() {
    let out = ppsim()
        .args([
            "cost",
            "--space",
            "torus2:16",
            "--process",
            "lattice:1",
            "--graphing",
            "cayley:1",
            "--replicas",
            "20",
            "--seed",
            "3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "graphing,eps,n,levels,replicas,mean_degree,stderr,intensity,cost,cost_stderr,connected_frac,seed"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("cayley:1,,,,20,"), "{row}");
}
