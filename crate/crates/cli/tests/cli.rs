use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn arrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arrm")).args(args).output().unwrap()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

const SMALL: &str = "\
[scenario]
num_users = 4
lifetime_slots = 30

[arrm]
horizon = 30
reopt_step = 10

[experiment]
video_rates_bps = [1500000.0, 6000000.0]
horizons = [1, 5, 10, 30]
user_counts = [2, 4]
gamma_points = 3
timing_users = [1, 2]
timing_horizons = [5, 10]
timing_samples = 3
";

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn custom_run_writes_its_files() {
    let dir = scratch("custom");
    let out = dir.join("out");
    let config = small_config(&dir);
    let result = arrm(&["custom", "--config", &config, "--reps", "2", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    assert!(header(&out.join("custom.csv")).starts_with("replication,seed,cell_se,mean_stall"));
    assert!(header(&out.join("custom_records.csv")).starts_with("user,slot,serving_bs,omega"));
    assert!(header(&out.join("custom_events.csv")).starts_with("slot,active_users"));
    assert_eq!(header(&out.join("custom_timing.csv")), "slot,active_users,solve_time_s");
    assert_eq!(fs::read_to_string(out.join("custom.csv")).unwrap().lines().count(), 3);
    let written = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(written.contains("seed = 3") && written.contains("replications = 2"));
}

#[test]
fn written_config_reproduces_the_run() {
    let dir = scratch("rerun");
    let (a, b) = (dir.join("a"), dir.join("b"));
    let config = small_config(&dir);
    assert!(arrm(&["custom", "--config", &config, "--reps", "2", "--out", a.to_str().unwrap()]).status.success());
    let again = a.join("config.toml");
    assert!(arrm(&["custom", "--config", again.to_str().unwrap(), "--out", b.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(a.join("custom.csv")).unwrap(), fs::read(b.join("custom.csv")).unwrap());
    assert_eq!(fs::read(a.join("config.toml")).unwrap(), fs::read(b.join("config.toml")).unwrap());
}

#[test]
fn fig_outputs_do_not_depend_on_thread_count() {
    let dir = scratch("threads");
    let config = small_config(&dir);
    for cmd in ["fig2", "fig3"] {
        let one = dir.join(format!("{cmd}-1"));
        let two = dir.join(format!("{cmd}-2"));
        for (out, threads) in [(&one, "1"), (&two, "2")] {
            let result = arrm(&[cmd, "--config", &config, "--reps", "3", "--threads", threads, "--out", out.to_str().unwrap()]);
            assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
        }
        let file = format!("{cmd}.csv");
        assert_eq!(fs::read(one.join(&file)).unwrap(), fs::read(two.join(&file)).unwrap(), "{file}");
    }
}

#[test]
fn fig5_and_table2_write_both_files() {
    let dir = scratch("fig5");
    let config = small_config(&dir);
    let out = dir.join("out");
    let o = out.to_str().unwrap();
    assert!(arrm(&["fig5", "--config", &config, "--reps", "2", "--out", o]).status.success());
    assert!(header(&out.join("fig5.csv")).starts_with("buffer_cap_bits,video_rate_bps,series"));
    assert!(out.join("fig5_sweep.csv").exists());
    assert!(arrm(&["table2", "--config", &config, "--out", o]).status.success());
    let table = fs::read_to_string(out.join("table2.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    assert!(table.lines().nth(1).unwrap().starts_with("1,5,10,"));
    assert!(out.join("table2_timing.csv").exists());
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let dir = scratch("bad");
    let o = dir.join("out");
    let o = o.to_str().unwrap();
    let missing = arrm(&["custom", "--config", "/nonexistent/arrm.toml", "--out", o]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error:"));

    let typo = dir.join("typo.toml");
    fs::write(&typo, "[arrm]\nhorizn = 10\n").unwrap();
    let unknown = arrm(&["custom", "--config", typo.to_str().unwrap(), "--out", o]);
    assert!(!unknown.status.success());
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("horizn"));

    let range = dir.join("range.toml");
    fs::write(&range, "[arrm]\nhorizon = 10\nreopt_step = 20\n").unwrap();
    let invalid = arrm(&["custom", "--config", range.to_str().unwrap(), "--out", o]);
    assert!(!invalid.status.success());
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("reopt_step"));

    assert!(!arrm(&["fig9"]).status.success());
    assert!(!arrm(&["custom", "--reps", "many"]).status.success());
}
