//! Materializes the fixture repositories and their dataset into a directory.
//!
//! Usage: gen-fixtures <output-dir>

fn main() {
    let Some(dir) = std::env::args_os().nth(1) else {
        eprintln!("usage: gen-fixtures <output-dir>");
        std::process::exit(2);
    };
    let dataset = workitem_szz_fixtures::materialize(std::path::Path::new(&dir));
    println!("{}", dataset.display());
}
