//! Agreement with a reference cheminformatics toolkit on the fixtures in
//! `data/`.

use organ_core::mol::{crippen, parse_smiles};

fn data(name: &str) -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/").to_string() + name;
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn rows(name: &str) -> Vec<Vec<String>> {
    data(name).lines().filter(|l| !l.starts_with('#')).map(|l| l.split('\t').map(str::to_string).collect()).collect()
}

#[test]
fn curated_suite_matches_expected_categories() {
    let mut wrong = Vec::new();
    for r in rows("smiles_curated.tsv") {
        let got = match parse_smiles(&r[0]) {
            Ok(_) => "ok",
            Err(e) => e.kind.name(),
        };
        let valid = r[1] == "1";
        if valid != (got == "ok") || got != r[3] {
            wrong.push(format!("{:?}: expected {} got {got}", r[0], r[3]));
        }
    }
    assert!(wrong.is_empty(), "{} mismatches:\n{}", wrong.len(), wrong.join("\n"));
}

#[test]
fn exhaustive_short_strings_agree_on_validity() {
    let rows = rows("smiles_exhaustive.tsv");
    let mut disagree = Vec::new();
    for r in &rows {
        if parse_smiles(&r[0]).is_ok() != (r[1] == "1") {
            disagree.push(r[0].clone());
        }
    }
    let agreement = 1.0 - disagree.len() as f64 / rows.len() as f64;
    assert!(agreement >= 0.99, "agreement {agreement:.4}; first disagreements {:?}", &disagree[..disagree.len().min(20)]);
}

#[test]
fn crippen_logp_tracks_the_reference() {
    let mut worst = (0.0f64, String::new());
    let mut total = 0.0;
    let rows = rows("molecules_reference.tsv");
    for r in &rows {
        let want: f64 = r[1].parse().unwrap();
        let got = crippen::logp(&parse_smiles(&r[0]).unwrap());
        let err = (got - want).abs();
        total += err;
        if err > worst.0 {
            worst = (err, r[0].clone());
        }
    }
    let mean = total / rows.len() as f64;
    assert!(mean < 0.05 && worst.0 < 0.3, "mean abs error {mean:.4}, worst {:.4} on {}", worst.0, worst.1);
    let ethanol = crippen::logp(&parse_smiles("CCO").unwrap());
    assert!((ethanol - -0.0014).abs() < 0.3);
}
