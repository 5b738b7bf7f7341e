use std::io::Write;
use std::process::{Command, Output};

fn hu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hu-stab"))
        .args(args)
        .env("HU_STAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn spec_file(json: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(json.as_bytes()).unwrap();
    f
}

#[test]
fn verify_from_flags_passes() {
    let o = hu(&["verify", "--gamma", "1", "--z-re", "1", "--interval", "UnitToInf", "--grid-n", "200"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["verdict"]["K"], 1.0);
    let ratio = v["ratio"].as_f64().unwrap();
    assert!(ratio > 0.99999 && ratio <= 1.0 + 1e-6);
}

#[test]
fn verify_from_spec_file_is_deterministic() {
    let f = spec_file(
        r#"{"order":1,"gamma":2,"z":{"re":0,"im":1},"interval":"UnitToInf","epsilon":1,
            "perturbation":{"family":"KernelAligned"},"grid":{"t_min":1.5,"t_max":1e6,"n":300}}"#,
    );
    let path = f.path().to_str().unwrap();
    let a = hu(&["verify", "--spec", path]);
    let b = hu(&["verify", "--spec", path]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert!(v["ratio"].as_f64().unwrap() >= 0.999);
}

#[test]
fn unstable_problem_reports_certificate() {
    let o = hu(&["verify", "--gamma", "1", "--z-re", "0", "--z-im", "1", "--interval", "HalfLine", "--grid-n", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"]["stable"], false);
    assert!(v["ratio"].is_null());
    assert_eq!(v["certificate"]["verified"], true);
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(hu(&["verify", "--gamma", "1", "--interval", "Nowhere"]).status.code(), Some(2));
    assert_eq!(hu(&["verify", "--gamma", "1", "--epsilon", "-1"]).status.code(), Some(2));
    let f = spec_file(r#"{"order":2,"gamma":1,"interval":"HalfLine","epsilon":1,"perturbation":{"family":"Zero"}}"#);
    assert_eq!(hu(&["verify", "--spec", f.path().to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(hu(&["verify", "--spec", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn tables_print_none_for_unstable_rows() {
    let o = hu(&["tables", "--z-re", "0", "--z-im", "1", "--gamma", "0,0.5,1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let table1: Vec<&str> = s.split("K on (0, 1)").next().unwrap().lines().skip(2).collect();
    assert!(table1.iter().filter(|l| !l.is_empty()).all(|l| l.ends_with("None")));

    let o = hu(&["tables", "--z-re", "1", "--gamma", "0.5,1,2", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let k = v["rows"][2]["unit_to_inf"].as_f64().unwrap();
    assert!((k - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
}

#[test]
fn factor_round_trip() {
    let o = hu(&["factor", "--alphas=-3,2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let mut roots: Vec<f64> = v["roots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["re"].as_f64().unwrap())
        .collect();
    roots.sort_by(f64::total_cmp);
    assert!((roots[0] + 2.0).abs() < 1e-10 && (roots[1] + 1.0).abs() < 1e-10);

    let o = hu(&["factor", "--roots=-1,-2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["alphas"][0]["re"], -3.0);
    assert_eq!(v["alphas"][1]["re"], 2.0);
}

#[test]
fn sweep_from_ranges() {
    let empty = spec_file(r#"{"gammas":[],"z":[],"intervals":[],"families":[],"seeds":[],"epsilon":0.1}"#);
    let o = hu(&["sweep", "--spec", empty.path().to_str().unwrap(), "--csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "gamma,re_z,im_z,interval,family,seed,K,sup_ratio,residual_max,pass,error\n"
    );

    let f = spec_file(
        r#"{"gammas":[0.5,1],"z":[{"re":1,"im":0.5},{"re":0,"im":1}],"intervals":["UnitToInf"],
            "families":["ConstantPhase","TrigRandom"],"seeds":[1],"epsilon":0.1,"n":80}"#,
    );
    let o = hu(&["sweep", "--spec", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 1 + 8);
    // Re z = 0 at γ <= 1 on (1, ∞): no constant, pass from the certificate
    let unstable: Vec<&str> = s.lines().filter(|l| l.contains(",0.0,1.0,")).collect();
    assert_eq!(unstable.len(), 4);
    for l in unstable {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols[6], "");
        assert_eq!(cols[9], "true");
    }
    assert_eq!(hu(&["sweep", "--spec", f.path().to_str().unwrap()]).stdout, o.stdout);
}

#[test]
fn witness_and_example() {
    let o = hu(&["witness", "--gamma", "3", "--z-im", "1", "--epsilon", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["certificates"].as_array().unwrap().len(), 3);

    let o = hu(&["example33", "--grid-n", "120"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let k = v["total_K"].as_f64().unwrap();
    let e = std::f64::consts::E;
    assert!((k - (e - 1.0) * (e * e - 1.0) / 2.0).abs() < 1e-12);
}
