//! The concrete repositories used across the test suites.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::{day, FixtureRepo, RepoBuilder, DAY};

pub const ENGINE_PY: &str = "src/engine.py";
pub const LEXER_C: &str = "src/lexer.c";
pub const SPECIES_JAVA: &str = "source/RMG/jing/chem/Species.java";
pub const UTIL_PY: &str = "lib/util.py";
pub const MATH_C: &str = "src/math.c";

fn engine_py(mx: u32, my: u32, mz: u32, other: u32) -> String {
    format!(
        "class Engine:\n\
         \x20   def mx(self, a):\n\
         \x20       total = a + {mx}\n\
         \x20       return total\n\
         \n\
         \x20   def my(self, a, b):\n\
         \x20       total = a * b + {my}\n\
         \x20       return total\n\
         \n\
         \x20   def mz(self):\n\
         \x20       return {mz}\n\
         \n\
         \x20   def other(self, items):\n\
         \x20       count = len(items) + {other}\n\
         \x20       return count\n"
    )
}

/// Seven commits `g` (oldest, root) … `a` (newest, the fix) whose method
/// overlap with `a` reproduces the classic tracking matrix:
///
/// ```text
///      Mx My Mz
///   a   1  1  1
///   b   1  1  1   (+ an unrelated method)
///   c   0  1  0
///   d   0  1  1
///   e   0  0  0
///   f   1  1  1
///   g   1  1  1
/// ```
///
/// The issue is reported on day 3, between `f` (day 2) and `e` (day 4).
pub struct WorkItemLayout {
    pub repo: FixtureRepo,
    pub issue_date: i64,
}

pub fn work_item_layout() -> WorkItemLayout {
    build_work_item_layout(RepoBuilder::new())
}

fn build_work_item_layout(mut b: RepoBuilder) -> WorkItemLayout {
    b.write(ENGINE_PY, engine_py(0, 0, 0, 0))
        .write("README.md", "engine\n");
    b.commit("g", day(0));
    b.write(ENGINE_PY, engine_py(1, 1, 1, 0));
    b.commit("f", day(2));
    b.write(ENGINE_PY, engine_py(1, 1, 1, 1));
    b.commit("e", day(4));
    b.write(ENGINE_PY, engine_py(1, 2, 2, 1));
    b.commit("d", day(5));
    b.write(ENGINE_PY, engine_py(1, 3, 2, 1));
    b.commit("c", day(6));
    b.write(ENGINE_PY, engine_py(2, 4, 3, 2));
    b.commit("b", day(7));
    b.write(ENGINE_PY, engine_py(3, 5, 4, 2));
    b.commit("a", day(8));
    WorkItemLayout {
        repo: b.finish(),
        issue_date: day(3),
    }
}

fn lexer_c(revs: &[(usize, &str)]) -> String {
    let mut lines = vec![
        "#include <stdio.h>".to_string(),
        String::new(),
        "int lex(int c) {".to_string(),
    ];
    for n in 4..=24 {
        let rev = revs
            .iter()
            .rev()
            .find(|(line, _)| *line == n)
            .map(|(_, r)| *r)
            .unwrap_or("g");
        lines.push(format!("    int v{n} = {n}; /* {rev} */"));
    }
    lines.push("    return c;".to_string());
    lines.push("}".to_string());
    lines.join("\n") + "\n"
}

/// Line blame layout: `g` writes every line, `f` rewrites lines 16–17,
/// `d` rewrites line 5, `c` rewrites line 15, and the fix rewrites `fix_lines`.
/// The issue is reported on day 4, between `f` (day 2) and `c` (day 6).
pub struct BlameLayout {
    pub repo: FixtureRepo,
    pub issue_date: i64,
    pub fix_lines: Vec<usize>,
}

pub fn blame_layout(fix_lines: &[usize]) -> BlameLayout {
    build_blame_layout(RepoBuilder::new(), fix_lines)
}

fn build_blame_layout(mut b: RepoBuilder, fix_lines: &[usize]) -> BlameLayout {
    let mut revs: Vec<(usize, &str)> = Vec::new();
    b.write(LEXER_C, lexer_c(&revs));
    b.commit("g", day(0));
    revs.extend([(16, "f"), (17, "f")]);
    b.write(LEXER_C, lexer_c(&revs));
    b.commit("f", day(2));
    revs.push((5, "d"));
    b.write(LEXER_C, lexer_c(&revs));
    b.commit("d", day(3));
    revs.push((15, "c"));
    b.write(LEXER_C, lexer_c(&revs));
    b.commit("c", day(6));
    revs.extend(fix_lines.iter().map(|l| (*l, "fix")));
    b.write(LEXER_C, lexer_c(&revs));
    b.commit("fix", day(8));
    BlameLayout {
        repo: b.finish(),
        issue_date: day(4),
        fix_lines: fix_lines.to_vec(),
    }
}

const SPECIES_HEAD: &str = "package jing.chem;

import java.util.HashMap;

public class Species {
    private String name;
    private static HashMap dictionary = new HashMap();

    public String getName() {
";

const SPECIES_MAKE_OPEN: &str = "    }

    public static Species make(String p_name, ChemGraph p_chemGraph) {
        Species spe = (Species) dictionary.get(p_chemGraph);
        if (spe == null) {
            spe = new Species(p_name, p_chemGraph);
            dictionary.put(p_chemGraph, spe);
";

const SPECIES_BIC_BLOCK: &str = "            if ((p_name == null || p_name.length() == 0) && spe.getThermoData() != null) {
                String name = spe.getThermoData().getName();
                if (name.matches(\"s\\\\d{8}\")) {
                    // keep the generated name
                } else {
                    // adopt the thermo library name
                    spe.setName(spe.getThermoData().getName());
";

const SPECIES_FIX_BLOCK: &str = "                    // the name changed, so the thermo data must follow it
                    // before anyone reads it again
                    spe.generateNASAThermoData();
";

const SPECIES_BIC_CLOSE: &str = "                }
            }
";

const SPECIES_TAIL: &str = "        }
        return spe;
    }

    private Species(String p_name, ChemGraph p_chemGraph) {
        name = p_name;
    }
}
";

fn species_java(with_bic: bool, with_fix: bool, trimmed_getter: bool) -> String {
    let mut s = String::from(SPECIES_HEAD);
    s.push_str(if trimmed_getter {
        "        return name.trim();\n"
    } else {
        "        return name;\n"
    });
    s.push_str(SPECIES_MAKE_OPEN);
    if with_bic {
        s.push_str(SPECIES_BIC_BLOCK);
        if with_fix {
            s.push_str(SPECIES_FIX_BLOCK);
        }
        s.push_str(SPECIES_BIC_CLOSE);
    }
    s.push_str(SPECIES_TAIL);
    s
}

/// A fix that only inserts lines inside a method body whose buggy branch
/// was inserted by an earlier commit (`bic`). Line blame has nothing to
/// trace; method overlap links the two commits.
pub struct InsertionOnlyLayout {
    pub repo: FixtureRepo,
}

pub fn insertion_only_layout() -> InsertionOnlyLayout {
    build_insertion_only(RepoBuilder::new())
}

fn build_insertion_only(mut b: RepoBuilder) -> InsertionOnlyLayout {
    b.write(SPECIES_JAVA, species_java(false, false, false))
        .write("README.md", "rmg\n");
    b.commit("base", day(0));
    b.write(SPECIES_JAVA, species_java(true, false, false));
    b.commit("bic", day(10));
    b.write(SPECIES_JAVA, species_java(true, false, true))
        .write("README.md", "rmg java\n");
    b.commit("noise", day(20));
    b.write(SPECIES_JAVA, species_java(true, true, true));
    b.commit("fix", day(40));
    InsertionOnlyLayout { repo: b.finish() }
}

const UTIL_BASE: &str = "def parse(text):
    return text.split(\",\")


def render(items):
    return \",\".join(items)
";

/// A fix that appends a brand new function. Nothing in history touched it
/// and the fix removes no lines, so both routes come back empty.
pub struct NoOverlapLayout {
    pub repo: FixtureRepo,
    pub issue_date: i64,
}

pub fn no_overlap_layout() -> NoOverlapLayout {
    build_no_overlap(RepoBuilder::new())
}

fn build_no_overlap(mut b: RepoBuilder) -> NoOverlapLayout {
    b.write(UTIL_PY, UTIL_BASE);
    b.commit("base", day(0));
    b.write(UTIL_PY, UTIL_BASE.replace("split(\",\")", "strip().split(\",\")"));
    b.commit("tweak", day(5));
    let mut fixed = String::from_utf8(b.content(UTIL_PY).unwrap().to_vec()).unwrap();
    fixed.push_str("\n\ndef helper(value):\n    return parse(value.lower())\n");
    b.write(UTIL_PY, fixed);
    b.commit("fix", day(10));
    NoOverlapLayout {
        repo: b.finish(),
        issue_date: day(9),
    }
}

fn ten_line_c(edit_line5: bool, edit_line2: bool) -> String {
    let mut lines: Vec<String> = (1..=10).map(|n| format!("int value_{n} = {n};")).collect();
    if edit_line2 {
        lines[1] = "int value_2 = 200;".to_string();
    }
    if edit_line5 {
        lines[4] = "int value_5 = 500;".to_string();
    }
    lines.join("\n") + "\n"
}

/// Root add, rename with one edit, a side branch merged back, a test-only
/// change and a binary file.
pub fn history_shapes() -> FixtureRepo {
    build_history_shapes(RepoBuilder::new())
}

fn build_history_shapes(mut b: RepoBuilder) -> FixtureRepo {
    b.write("x.c", ten_line_c(false, false))
        .write("tests/test_foo.py", "def test_foo():\n    assert 1 == 1\n");
    b.commit("root", day(0));
    b.rename("x.c", "y.c").write("y.c", ten_line_c(true, false));
    b.commit("rename", day(1));
    b.checkout("rename", "side");
    b.write("z.c", "int z(void) {\n    return 0;\n}\n");
    b.commit("side", day(2));
    b.checkout("rename", "main");
    b.write("y.c", ten_line_c(true, true));
    b.commit("mainline", day(3));
    b.write("z.c", "int z(void) {\n    return 0;\n}\n");
    b.merge("merge", day(4), "side");
    b.write("tests/test_foo.py", "def test_foo():\n    assert 2 == 2\n");
    b.commit("tests", day(5));
    b.write("logo.png", [0x89u8, b'P', b'N', b'G', 0, 0, 1, 2, 0, 255]);
    b.commit("binary", day(6));
    b.finish()
}

pub fn abc_linear() -> FixtureRepo {
    build_abc_linear(RepoBuilder::new())
}

fn build_abc_linear(mut b: RepoBuilder) -> FixtureRepo {
    b.write("README.md", "a\n");
    b.commit("a", day(0));
    b.write("README.md", "a\nb\n");
    b.commit("b", day(1));
    b.write("README.md", "a\nb\nc\n");
    b.commit("c", day(2));
    b.finish()
}

/// Ground-truth function spans (1-based, inclusive) in [`MATH_C`] at `base`.
pub const MATH_SPANS: [(&str, usize, usize); 4] =
    [("add", 3, 6), ("sub", 8, 11), ("mul", 13, 16), ("neg", 18, 21)];

fn math_c(edited: bool, with_neg: bool) -> String {
    let op = |name: &str, sym: &str| {
        let body = if edited {
            format!("    int r = (a {sym} b);")
        } else {
            format!("    int r = a {sym} b;")
        };
        format!("int {name}(int a, int b) {{\n{body}\n    return r;\n}}\n")
    };
    let mut s = String::from("#include <stdlib.h>\n\n");
    s.push_str(&op("add", "+"));
    s.push('\n');
    s.push_str(&op("sub", "-"));
    s.push('\n');
    s.push_str(&op("mul", "*"));
    if with_neg {
        s.push_str("\nint neg(int a) {\n    int r = -a;\n    return r;\n}\n");
    }
    s
}

/// `base` writes four C functions, `edit3` changes one line inside each of
/// the first three, `drop` deletes `neg` entirely.
pub fn three_functions() -> FixtureRepo {
    let mut b = RepoBuilder::new();
    b.write(MATH_C, math_c(false, true));
    b.commit("base", day(0));
    b.write(MATH_C, math_c(true, true));
    b.commit("edit3", day(1));
    b.write(MATH_C, math_c(true, false));
    b.commit("drop", day(2));
    b.finish()
}

/// Writes every scenario repository under `root` plus a `dataset.json`
/// covering both routing outcomes. Returns the dataset path.
pub fn materialize(root: &Path) -> PathBuf {
    std::fs::create_dir_all(root).expect("create fixture root");

    let layout = build_work_item_layout(RepoBuilder::at(&root.join("work-items")));
    let species = build_insertion_only(RepoBuilder::at(&root.join("insertion-only")));
    let blame = build_blame_layout(RepoBuilder::at(&root.join("blame")), &[15, 16, 20]);
    let helper = build_no_overlap(RepoBuilder::at(&root.join("no-overlap")));
    let shapes = build_history_shapes(RepoBuilder::at(&root.join("history-shapes")));
    build_abc_linear(RepoBuilder::at(&root.join("abc-linear")));

    let records = json!([
        {
            "id": "engine-1",
            "repo": "work-items",
            "fix_commit_hash": layout.repo.id("a"),
            "bug_commit_hashes": [layout.repo.id("f")],
            "issue_date": layout.issue_date,
            "language": "Python"
        },
        {
            "id": "species-1",
            "repo": "insertion-only",
            "fix_commit_hash": species.repo.id("fix"),
            "bug_commit_hashes": [species.repo.id("bic")],
            "language": "Java"
        },
        {
            "id": "lexer-1",
            "repo": "blame",
            "fix_commit_hash": blame.repo.id("fix"),
            "bug_commit_hashes": [blame.repo.id("f")],
            "issue_date": blame.issue_date,
            "language": "C"
        },
        {
            "id": "helper-1",
            "repo": "no-overlap",
            "fix_commit_hash": helper.repo.id("fix"),
            "bug_commit_hashes": [helper.repo.id("base")],
            "issue_date": helper.issue_date,
            "language": "Python"
        },
        {
            "id": "tests-1",
            "repo": "history-shapes",
            "fix_commit_hash": shapes.id("tests"),
            "bug_commit_hashes": [shapes.id("root")],
            "issue_date": day(4) + DAY / 2,
            "language": "Python"
        }
    ]);
    let path = root.join("dataset.json");
    std::fs::write(&path, serde_json::to_string_pretty(&records).unwrap() + "\n")
        .expect("write dataset");
    path
}
