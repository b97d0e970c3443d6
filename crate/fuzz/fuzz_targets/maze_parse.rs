#![no_main]

use libfuzzer_sys::fuzz_target;
use soc::Maze;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(maze) = Maze::parse(text) {
        let rendered = maze.to_string();
        let again = Maze::parse(&rendered).expect("rendered maze must parse");
        assert_eq!(again.to_string(), rendered);
        assert!(!maze.is_wall(maze.goal()));
        assert!(maze.free_cells().next().is_some());
    }
});
