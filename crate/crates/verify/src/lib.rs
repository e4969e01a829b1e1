//! Holds the `acceptance` test target (`tests/acceptance.rs`), one
//! PASS/FAIL line per criterion. The package sorts after the library and
//! CLI crates, so a red criterion does not keep their tests from running.
