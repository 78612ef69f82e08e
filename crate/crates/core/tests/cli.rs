use std::path::Path;

use coxret::cli::main_with_args;

fn run(args: &[&str]) -> i32 {
    let mut v = vec!["coxret"];
    v.extend_from_slice(args);
    main_with_args(v)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        assert_eq!(run(&["simulate", "--seed", "7", "--set", "days=300", "-o", p(out)]), 0);
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("# coxret "));
    assert!(text.contains("# seed = 7\n"));
    assert!(text.contains("\nday,count,return,log_price\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 301);
}

#[test]
fn replaying_header_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "d = 0.3\ndays = 200\ncounting = poisson\nseed = 11\n").unwrap();
    let first = dir.path().join("first.csv");
    assert_eq!(run(&["simulate", "--config", p(&cfg), "-o", p(&first)]), 0);
    let second = dir.path().join("second.csv");
    assert_eq!(run(&["simulate", "--config", p(&first), "-o", p(&second)]), 0);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Missing seed and invalid memory parameter are configuration errors.
    assert_eq!(run(&["simulate"]), 2);
    assert_eq!(run(&["moments", "--set", "d=0.7"]), 2);
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "lambda = 10\nnot_a_key = 3\n").unwrap();
    assert_eq!(run(&["moments", "--config", p(&bad)]), 2);
    assert_eq!(run(&["no-such-command"]), 2);
    // Counts-free series cannot be estimated.
    let nc = dir.path().join("nc.csv");
    std::fs::write(&nc, "day,return\n1,0.1\n2,0.2\n3,0.3\n4,0.1\n5,0.0\n").unwrap();
    assert_eq!(run(&["estimate", "-i", p(&nc)]), 4);
    assert_eq!(run(&["gph", "-i", p(&nc)]), 4);
    // Missing input file.
    assert_eq!(run(&["estimate", "-i", p(&dir.path().join("missing.csv"))]), 1);
}

#[test]
fn estimate_and_tests_from_simulated_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    assert_eq!(
        run(&[
            "simulate",
            "--seed",
            "3",
            "--set",
            "months=64",
            "--set",
            "counting=poisson",
            "-o",
            p(&path)
        ]),
        0
    );
    let est = dir.path().join("est.txt");
    assert_eq!(run(&["estimate", "-i", p(&path), "-o", p(&est)]), 0);
    let text = std::fs::read_to_string(&est).unwrap();
    for key in [
        "mu_hat = ",
        "lambda_hat = ",
        "sigma_e_hat = ",
        "c_hat = ",
        "d_hat = ",
        "converged = ",
    ] {
        assert!(text.contains(key), "missing {key}");
    }
    let agg = dir.path().join("agg.csv");
    assert_eq!(run(&["aggregate", "-i", p(&path), "--kappa", "0.5", "-o", p(&agg)]), 0);
    let agg = std::fs::read_to_string(&agg).unwrap();
    let rows: Vec<&str> = agg.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t_tilde,R_forward,RV_backward,R_tilde_forward");
    // T̃ = 64, H̃ = 8: months 8..=56.
    assert_eq!(rows.len() - 1, 49);
    assert!(rows[1].starts_with("8,"));
    let t = dir.path().join("t.txt");
    assert_eq!(
        run(&["test-asymptotic", "-i", p(&path), "--kappa", "0.3", "-o", p(&t)]),
        0
    );
    assert!(std::fs::read_to_string(&t).unwrap().contains("critical_value = 1.343"));
    let b = dir.path().join("b.txt");
    let args = [
        "test-linear",
        "-i",
        p(&path),
        "--theta",
        "0.25",
        "--seed",
        "5",
        "--bootstrap-reps",
        "100",
        "--set",
        "counting=poisson",
        "-o",
        p(&b),
    ];
    assert_eq!(run(&args), 0);
    let first = std::fs::read_to_string(&b).unwrap();
    assert!(first.contains("replicates = "));
    assert_eq!(run(&args), 0);
    assert_eq!(first, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn mc_table_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mc.cfg");
    std::fs::write(&cfg, "t_tildes = 40,80\nkappas = 0.3\nthetas = 0.1\nreps = 4\ncounting = poisson\nmc_test = asymptotic\nnull = known\n").unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        assert_eq!(
            run(&[
                "mc-table",
                "--config",
                p(&cfg),
                "--seed",
                "1",
                "--threads",
                "2",
                "-o",
                p(out)
            ]),
            0
        );
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(
        rows[0],
        "framework,param,T_tilde,reps,mean_rho,var_rho,rejection_rate,slope_cell_marker,failed"
    );
    assert_eq!(rows.len(), 1 + 4 + 2);
    assert!(rows.iter().any(|r| r.starts_with("linear,0.1,*,")));
}

#[test]
fn thread_flag_beats_environment() {
    std::env::set_var(coxret::cli::THREADS_ENV, "not-a-number");
    assert_eq!(run(&["moments", "--set", "max_lag=1"]), 2);
    assert_eq!(
        run(&["moments", "--set", "max_lag=1", "--threads", "1", "-o", "/dev/null"]),
        0
    );
    std::env::remove_var(coxret::cli::THREADS_ENV);
}
