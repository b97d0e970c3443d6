#![no_main]

use clap::Parser;
use libfuzzer_sys::fuzz_target;
use soc::cli::Cli;

// Parses argument vectors only; nothing is run.
fuzz_target!(|args: Vec<String>| {
    let argv = std::iter::once("soc".to_string()).chain(args);
    let _ = Cli::try_parse_from(argv);
});
