//! Reading and writing model and observation files.

use dbnkit::model::{format_obs, load_model, model_from_json, parse_obs, save_model, Model};

const HMM: &str = r#"{
  "type": "hmm",
  "num_states": 2,
  "num_symbols": 2,
  "pi": [0.6, 0.4],
  "A": [[0.7, 0.3], [0.4, 0.6]],
  "B": [[0.9, 0.1], [0.2, 0.8]]
}"#;

fn main() -> dbnkit::Result<()> {
    let model = model_from_json(HMM)?;
    println!("loaded a {} model", model.kind());

    let dir = std::env::temp_dir().join(format!("dbnkit-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|source| dbnkit::Error::Io { path: dir.clone(), source })?;
    let path = dir.join("model.json");
    save_model(&model, &path)?;
    let back = load_model(&path)?;
    assert_eq!(back, model);

    let seqs = parse_obs("0 1 0\n1 1 0 0\n")?;
    print!("{}", format_obs(&seqs));

    // diagnostics name the line, column and field
    let broken = HMM.replace("[0.6, 0.4]", "[0.6, 0.5]");
    match model_from_json(&broken).and_then(|m: Model| m.validate().map(|_| m)) {
        Ok(_) => println!("unexpectedly valid"),
        Err(e) => println!("rejected: {e}"),
    }
    if let Err(e) = parse_obs("0 1\n0 x 1\n") {
        println!("rejected: {e}");
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
