use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mlsm::calibration::{model_prices, CalibrationOptions, OptionChain, Quote};
use mlsm::model::{BlmParams, IgParams, MlsmParams, Model, NigParams};
use mlsm::simulator::{sample_ig, sample_model, RngSeed};
use mlsm::transform::DEFAULT_DAMPING;
use serde_json::Value;

fn mlsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlsm"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let o = mlsm(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn doc(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_params(path: &Path, m: &Model) {
    fs::write(path, mlsm::io::params_to_json(m).unwrap()).unwrap();
}

fn exhibit4() -> Model {
    Model::Mlsm(MlsmParams {
        mu: 0.0,
        rho: 0.05,
        sigma: 2.13,
        nig: NigParams::new(-0.4, 241.0, 1.2, 5.0).unwrap(),
        ig: IgParams::new(0.192548, 1.49156).unwrap(),
    })
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn fit_vix_recovers_ig_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let (h, l) = (0.192548, 1.49156);
    let v = sample_ig(h, l, 20_000, RngSeed(5)).unwrap();
    let series = mlsm::inference::VixSeries::synthetic(v.iter().map(|x| x / 0.01).collect()).unwrap();
    let mut text = String::from("date,level\n");
    for (d, x) in series.dates.iter().zip(&series.levels) {
        text += &format!("{d},{x}\n");
    }
    let input = dir.path().join("vix.csv");
    fs::write(&input, text).unwrap();
    let out = dir.path().join("ig.json");
    ok(&["fit-vix", "--in", s(&input), "--out", s(&out)]);
    let d = doc(&out);
    let (fh, fl) = (d["parameters"]["h"].as_f64().unwrap(), d["parameters"]["l"].as_f64().unwrap());
    assert!((fh / h - 1.0).abs() < 0.02, "{fh}");
    assert!((fl / l - 1.0).abs() < 0.05, "{fl}");
    assert_eq!(d["command"], "fit-vix");
    assert_eq!(d["inputs"][s(&input)].as_str().unwrap().len(), 64);
    assert!(d["diagnostics"]["gof"]["ks_pvalue"].as_f64().unwrap() > 1e-3);
}

#[test]
fn price_table_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    write_params(&p, &exhibit4());
    let csv = dir.path().join("prices.csv");
    let out = dir.path().join("doc.json");
    ok(&[
        "price", "--params", s(&p), "--s0", "292.58", "--r", "0.015", "--expiry-days", "30",
        "--strikes", "280,295,310", "--csv", s(&csv), "--out", s(&out),
    ]);
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1][1] <= w[0][1]), "{rows:?}");
    assert!(rows.iter().all(|r| r[1] >= 0.0 && r[2] >= 0.0));
}

#[test]
fn pwf_of_identical_laws_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    // drift chosen so the mean-correcting measure leaves the law unchanged at r = 0
    let base = BlmParams { mu: 0.0, rho: 0.004, sigma: 1.0, nig: NigParams::new(0.0, 60.0, -8.0, 0.02).unwrap() };
    let k1 = Model::Blm(base).compensator().unwrap();
    let m = Model::Blm(BlmParams { mu: -k1, ..base });
    assert!(m.compensator().unwrap().abs() < 1e-15);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    write_params(&a, &m);
    write_params(&b, &m);
    let csv = dir.path().join("curve.csv");
    let out = dir.path().join("doc.json");
    ok(&["pwf", "--spot-params", s(&a), "--rn-params", s(&b), "--r", "0", "--csv", s(&csv), "--out", s(&out)]);
    let g = mlsm::transform::model_distribution(&m, 1.0, mlsm::transform::Measure::Physical, 1 << 14, 20.0).unwrap();
    let cell = g.spacing() * g.pdf.iter().cloned().fold(0.0, f64::max);
    for r in csv_rows(&csv) {
        assert!((r[0] - r[1]).abs() <= 2.0 * cell, "{r:?} cell {cell}");
    }
    assert_eq!(doc(&out)["diagnostics"]["shape"]["inflection_points"].as_array().unwrap().len(), 0);
}

#[test]
fn errors_are_categorized() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("chain.csv");
    fs::write(&chain, "quote_date,expiry_date,strike,mid\n2019-08-29,2019-09-27,290,10\n2019-08-29,2019-09-27,-5,1\n").unwrap();
    let p = dir.path().join("p.json");
    write_params(&p, &exhibit4());
    let o = mlsm(&["calibrate", "--chain", s(&chain), "--s0", "292.58", "--r", "0.015", "--start", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    let e: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(e["error"]["category"], "parse");
    assert!(e["error"]["message"].as_str().unwrap().contains("line 3"));

    let o = mlsm(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));

    // writing over an input is refused
    let o = mlsm(&["simulate", "--params", s(&p), "--csv", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"config\""));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, fs::read_to_string(&p).unwrap().replace("\"mu\"", "\"extra\": 1, \"mu\"")).unwrap();
    let o = mlsm(&["simulate", "--params", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));

    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "dampng = 0.75\n").unwrap();
    let o = mlsm(&["--config", s(&cfg), "simulate", "--params", s(&p)]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"config\""));
}

#[test]
fn simulate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    write_params(&p, &exhibit4());
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    for (f, seed) in [(&a, "3"), (&b, "3"), (&c, "4")] {
        ok(&["simulate", "--params", s(&p), "--n", "1000", "--seed", seed, "--csv", s(f), "--out", s(&dir.path().join("d.json"))]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    let direct = sample_model(&exhibit4(), 1.0, 1000, RngSeed(3)).unwrap();
    let rows = csv_rows(&a);
    assert!(rows.iter().zip(&direct.values).all(|(r, v)| r[1] == *v));
}

struct Pipeline {
    files: Vec<PathBuf>,
}

fn run_pipeline(dir: &Path, vix: &Path, returns: &Path, chain: &Path, cfg: &Path) -> Pipeline {
    let j = |n: &str| dir.join(n);
    let c = s(cfg);
    ok(&["--config", c, "fit-vix", "--in", s(vix), "--out", s(&j("ig.json")), "--csv", s(&j("ig_pp.csv"))]);
    ok(&[
        "--config", c, "fit-returns", "--in", s(returns), "--model", "mlsm", "--ig", s(&j("ig.json")),
        "--out", s(&j("spot.json")), "--params-out", s(&j("spot_params.json")), "--csv", s(&j("spot_pp.csv")),
    ]);
    ok(&[
        "--config", c, "calibrate", "--chain", s(chain), "--start", s(&j("spot_params.json")),
        "--out", s(&j("rn.json")), "--params-out", s(&j("rn_params.json")), "--csv", s(&j("resid.csv")),
    ]);
    ok(&[
        "--config", c, "pwf", "--spot-params", s(&j("spot_params.json")), "--rn-params", s(&j("rn.json")),
        "--out", s(&j("pwf.json")), "--csv", s(&j("pwf.csv")),
    ]);
    let names = ["ig.json", "ig_pp.csv", "spot.json", "spot_params.json", "spot_pp.csv", "rn.json", "rn_params.json", "resid.csv", "pwf.json", "pwf.csv"];
    Pipeline { files: names.iter().map(|n| j(n)).collect() }
}

#[test]
fn pipeline_is_byte_stable_and_leaves_inputs_alone() {
    let dir = tempfile::tempdir().unwrap();
    let truth = exhibit4();
    let ig = *truth.ig().unwrap();
    let v = sample_ig(ig.h, ig.l, 2000, RngSeed(11)).unwrap();
    let vs = mlsm::inference::VixSeries::synthetic(v.iter().map(|x| x / 0.01).collect()).unwrap();
    let vix = dir.path().join("vix.csv");
    let mut t = String::from("date,level\n");
    for (d, x) in vs.dates.iter().zip(&vs.levels) {
        t += &format!("{d},{x}\n");
    }
    fs::write(&vix, t).unwrap();

    // a milder daily law than the table values, so that the fit runs quickly
    let spot = Model::Mlsm(MlsmParams {
        mu: 0.0003,
        rho: 0.004,
        sigma: 1.0,
        nig: NigParams::new(0.0, 60.0, -8.0, 0.02).unwrap(),
        ig,
    });
    let r = sample_model(&spot, 1.0, 2000, RngSeed(12)).unwrap();
    let rs = mlsm::inference::ReturnSeries::synthetic(r.values);
    let returns = dir.path().join("returns.csv");
    let mut t = String::from("date,log_return\n");
    for (d, x) in rs.dates.iter().zip(&rs.values) {
        t += &format!("{d},{x}\n");
    }
    fs::write(&returns, t).unwrap();

    let s0 = 292.58;
    let q = "2019-08-29".parse().unwrap();
    let mut quotes = Vec::new();
    for e in ["2019-09-27", "2019-10-25", "2019-12-20"] {
        for i in 0..6 {
            quotes.push(Quote { expiry: e.parse().unwrap(), strike: s0 * (0.9 + 0.04 * i as f64), mid: 0.0 });
        }
    }
    let mut chain = OptionChain::new(q, s0, 0.015, quotes).unwrap();
    let prices = model_prices(&spot, &chain, DEFAULT_DAMPING, &CalibrationOptions::default().fft).unwrap();
    let mut text = String::from("quote_date,expiry_date,strike,mid\n");
    for (qt, p) in chain.quotes.iter_mut().zip(prices) {
        text += &format!("2019-08-29,{},{},{}\n", qt.expiry, qt.strike, p * 1.02);
    }
    // one quote above the spot must be screened out
    text += &format!("2019-08-29,2019-09-27,10,{}\n", s0 + 1.0);
    let chain_path = dir.path().join("chain.csv");
    fs::write(&chain_path, text).unwrap();

    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 9\n[ecf]\nn_starts = 3\n[optimizer]\ncalibration_starts = 2\n[optimizer.ecf]\nmax_iter = 1500\n[optimizer.calibration]\nmax_iter = 200\n[market]\ns0 = 292.58\nr = 0.015\n").unwrap();

    let inputs = [&vix, &returns, &chain_path, &cfg];
    let before: Vec<Vec<u8>> = inputs.iter().map(|p| fs::read(p).unwrap()).collect();
    // outputs record input paths, so both runs use the same directory
    let a = dir.path().join("out");
    fs::create_dir(&a).unwrap();
    let run = run_pipeline(&a, &vix, &returns, &chain_path, &cfg);
    let first: Vec<Vec<u8>> = run.files.iter().map(|f| fs::read(f).unwrap()).collect();
    let again = run_pipeline(&a, &vix, &returns, &chain_path, &cfg);
    for (x, bytes) in again.files.iter().zip(&first) {
        assert_eq!(&fs::read(x).unwrap(), bytes, "{}", x.display());
    }
    let after: Vec<Vec<u8>> = inputs.iter().map(|p| fs::read(p).unwrap()).collect();
    assert_eq!(before, after);

    let rn = doc(&a.join("rn.json"));
    assert_eq!(rn["diagnostics"]["dropped"].as_array().unwrap().len(), 1);
    assert_eq!(rn["diagnostics"]["n_quotes_used"], 18);
    // the parameter block reloads into the exact model written alongside it
    let from_doc = mlsm::io::load_params(&a.join("rn.json")).unwrap();
    let from_file = mlsm::io::load_params(&a.join("rn_params.json")).unwrap();
    assert_eq!(from_doc, from_file);
}
