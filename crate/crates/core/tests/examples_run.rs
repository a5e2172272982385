use std::path::PathBuf;
use std::process::Command;

const EXAMPLES: [&str; 9] = [
    "hmm_inference",
    "viterbi_decoding",
    "baum_welch",
    "mle_complete",
    "coupled_hmm",
    "two_slice_dbn",
    "particle_filter",
    "allen_relations",
    "model_files",
];

// cargo builds examples before running integration tests
fn example_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().join("examples")
}

#[test]
fn every_example_runs() {
    let dir = example_dir();
    for name in EXAMPLES {
        let path = dir.join(format!("{name}{}", std::env::consts::EXE_SUFFIX));
        if !path.exists() {
            eprintln!("skipping {name}: not built at {}", path.display());
            continue;
        }
        let out = Command::new(&path).output().unwrap();
        assert!(
            out.status.success(),
            "{name} failed:\n{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
    }
}
