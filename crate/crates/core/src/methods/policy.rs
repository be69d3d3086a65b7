use globset::{Glob, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TEST_SEGMENTS: [&str; 4] = ["test", "tests", "spec", "specs"];
pub const DEFAULT_TEST_PATTERNS: [&str; 5] = ["test_*", "*_test.*", "*Test.*", "*.spec.*", "*.test.*"];

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawPolicy {
    dir_segments: Vec<String>,
    file_patterns: Vec<String>,
}

/// Decides which paths hold test code. Changes to test code never count as
/// method modifications.
///
/// A path is test code when any of its segments equals one of
/// `dir_segments` (ASCII case-insensitive), or its file name matches one of
/// the `file_patterns` globs (case-sensitive).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy", into = "RawPolicy")]
pub struct TestPathPolicy {
    dir_segments: Vec<String>,
    file_patterns: Vec<String>,
    matcher: GlobSet,
}

impl TestPathPolicy {
    pub fn new(dir_segments: Vec<String>, file_patterns: Vec<String>) -> Result<Self> {
        let mut builder = GlobSetBuilder::new();
        for pattern in &file_patterns {
            let glob = Glob::new(pattern).map_err(|e| Error::Format {
                what: "test path pattern",
                message: format!("{pattern}: {e}"),
            })?;
            builder.add(glob);
        }
        let matcher = builder.build().map_err(|e| Error::Format {
            what: "test path pattern set",
            message: e.to_string(),
        })?;
        Ok(Self {
            dir_segments,
            file_patterns,
            matcher,
        })
    }

    pub fn dir_segments(&self) -> &[String] {
        &self.dir_segments
    }

    pub fn file_patterns(&self) -> &[String] {
        &self.file_patterns
    }

    pub fn is_test_path(&self, path: &str) -> bool {
        let mut segments = path.split(['/', '\\']).filter(|s| !s.is_empty()).peekable();
        let mut file_name = "";
        while let Some(segment) = segments.next() {
            if self
                .dir_segments
                .iter()
                .any(|d| d.eq_ignore_ascii_case(segment))
            {
                return true;
            }
            if segments.peek().is_none() {
                file_name = segment;
            }
        }
        !file_name.is_empty() && self.matcher.is_match(file_name)
    }
}

impl Default for TestPathPolicy {
    fn default() -> Self {
        Self::new(
            DEFAULT_TEST_SEGMENTS.iter().map(|s| s.to_string()).collect(),
            DEFAULT_TEST_PATTERNS.iter().map(|s| s.to_string()).collect(),
        )
        .expect("default patterns are valid")
    }
}

impl TryFrom<RawPolicy> for TestPathPolicy {
    type Error = Error;

    fn try_from(raw: RawPolicy) -> Result<Self> {
        Self::new(raw.dir_segments, raw.file_patterns)
    }
}

impl From<TestPathPolicy> for RawPolicy {
    fn from(p: TestPathPolicy) -> Self {
        RawPolicy {
            dir_segments: p.dir_segments,
            file_patterns: p.file_patterns,
        }
    }
}

pub fn is_test_path(path: &str, policy: &TestPathPolicy) -> bool {
    policy.is_test_path(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_matches() {
        let p = TestPathPolicy::default();
        assert!(p.is_test_path("src/tests/util.c"));
        assert!(p.is_test_path("Test/Main.java"));
        assert!(p.is_test_path("spec/models/user_spec.rb"));
        assert!(p.is_test_path("a/SPECS/b.js"));
    }

    #[test]
    fn substrings_do_not_match() {
        let p = TestPathPolicy::default();
        assert!(!p.is_test_path("src/contest.c"));
        assert!(!p.is_test_path("src/testing/util.c"));
        assert!(!p.is_test_path("src/attestation.py"));
        assert!(!p.is_test_path("src/Contest.java"));
        assert!(!p.is_test_path("src/test.py"));
    }

    #[test]
    fn default_file_patterns() {
        let p = TestPathPolicy::default();
        assert!(p.is_test_path("FooTest.java"));
        assert!(p.is_test_path("pkg/test_parser.py"));
        assert!(p.is_test_path("pkg/parser_test.go"));
        assert!(p.is_test_path("web/app.spec.ts"));
        assert!(p.is_test_path("web/app.test.js"));
        assert!(!p.is_test_path("web/app.js"));
        assert!(!p.is_test_path("Testimony.java"));
    }

    #[test]
    fn custom_patterns_replace_defaults() {
        let p = TestPathPolicy::new(vec!["qa".into()], vec!["*Check.cs".into()]).unwrap();
        assert!(p.is_test_path("qa/a.cs"));
        assert!(p.is_test_path("src/FooCheck.cs"));
        assert!(!p.is_test_path("tests/a.cs"));
        assert!(!p.is_test_path("FooTest.java"));
    }

    #[test]
    fn invalid_glob_is_rejected() {
        assert!(TestPathPolicy::new(vec![], vec!["[".into()]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let p = TestPathPolicy::default();
        let json = serde_json::to_string(&p).unwrap();
        let back: TestPathPolicy = serde_json::from_str(&json).unwrap();
        assert_eq!(back.file_patterns(), p.file_patterns());
        assert!(back.is_test_path("FooTest.java"));
    }
}
