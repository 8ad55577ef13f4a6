//! Every example under `examples/` runs to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::run().expect(concat!(stringify!($name), " example failed"));
        }
    };
}

example!(annealing);
example!(fock_space);
example!(jaynes_cummings);
example!(measurement);
example!(qubit_bases);
example!(readout_models);
example!(special_functions);
example!(sweeps);

#[test]
fn every_example_is_listed() {
    let listed = include_str!("examples.rs");
    for entry in std::fs::read_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/examples")).unwrap() {
        let stem = entry.unwrap().path().file_stem().unwrap().to_string_lossy().into_owned();
        assert!(listed.contains(&format!("example!({stem});")), "examples/{stem}.rs is not exercised");
    }
}
