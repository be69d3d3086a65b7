//! Syntax-aware function boundary detection over tree-sitter grammars.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tree_sitter::{Node, Parser};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Language {
    C,
    Cpp,
    CSharp,
    Java,
    JavaScript,
    Php,
    Python,
    Ruby,
}

impl Language {
    pub const ALL: [Language; 8] = [
        Language::C,
        Language::Cpp,
        Language::CSharp,
        Language::Java,
        Language::JavaScript,
        Language::Php,
        Language::Python,
        Language::Ruby,
    ];

    /// Detects the language from the file extension. Headers (`.h`) are
    /// parsed as C++, which accepts the C declarations they usually hold.
    pub fn from_path(path: &str) -> Option<Language> {
        let ext = Path::new(path).extension()?.to_str()?.to_ascii_lowercase();
        Some(match ext.as_str() {
            "c" => Language::C,
            "h" | "cc" | "cpp" | "cxx" | "c++" | "hh" | "hpp" | "hxx" | "h++" | "ipp" | "tpp" => Language::Cpp,
            "cs" => Language::CSharp,
            "java" => Language::Java,
            "js" | "jsx" | "mjs" | "cjs" => Language::JavaScript,
            "php" | "phtml" | "php3" | "php4" | "php5" | "phps" => Language::Php,
            "py" | "pyw" => Language::Python,
            "rb" | "rake" | "gemspec" => Language::Ruby,
            _ => return None,
        })
    }

    fn grammar(self) -> tree_sitter::Language {
        match self {
            Language::C => tree_sitter_c::LANGUAGE.into(),
            Language::Cpp => tree_sitter_cpp::LANGUAGE.into(),
            Language::CSharp => tree_sitter_c_sharp::LANGUAGE.into(),
            Language::Java => tree_sitter_java::LANGUAGE.into(),
            Language::JavaScript => tree_sitter_javascript::LANGUAGE.into(),
            Language::Php => tree_sitter_php::LANGUAGE_PHP.into(),
            Language::Python => tree_sitter_python::LANGUAGE.into(),
            Language::Ruby => tree_sitter_ruby::LANGUAGE.into(),
        }
    }
}

/// One named function or method and the lines it occupies (1-based, inclusive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpan {
    pub qualified_name: String,
    pub arity: usize,
    pub start_line: usize,
    pub end_line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub functions: Vec<FunctionSpan>,
    /// Lambdas and other unnamed functions, which are not tracked.
    pub anonymous: usize,
    pub has_syntax_errors: bool,
}

enum Role<'t> {
    Container(Option<String>),
    Function {
        name: Option<String>,
        params: Option<Node<'t>>,
    },
    Anonymous,
    Other,
}

enum Frame<'t> {
    Enter(Node<'t>),
    Leave { pushed: bool },
}

/// Parses `source` and lists its named functions. Returns `None` only when
/// the parser produced no tree at all.
pub fn extract_functions(lang: Language, source: &[u8]) -> Option<Extraction> {
    let mut parser = Parser::new();
    parser.set_language(&lang.grammar()).ok()?;
    let tree = parser.parse(source, None)?;
    let root = tree.root_node();

    let mut out = Extraction {
        has_syntax_errors: root.has_error(),
        ..Extraction::default()
    };
    let mut scope: Vec<String> = Vec::new();
    let mut stack = vec![Frame::Enter(root)];
    let mut cursor = root.walk();

    while let Some(frame) = stack.pop() {
        let node = match frame {
            Frame::Leave { pushed } => {
                if pushed {
                    scope.pop();
                }
                continue;
            }
            Frame::Enter(node) => node,
        };
        let pushed = match classify(lang, node, source) {
            Role::Container(Some(name)) => {
                scope.push(name);
                true
            }
            Role::Function {
                name: Some(name),
                params,
            } => {
                let qualified_name = if scope.is_empty() {
                    name.clone()
                } else {
                    format!("{}::{}", scope.join("::"), name)
                };
                out.functions.push(FunctionSpan {
                    qualified_name,
                    arity: params.map_or(0, |p| count_params(lang, p, source)),
                    start_line: node.start_position().row + 1,
                    end_line: end_line(node),
                });
                scope.push(name);
                true
            }
            Role::Function { name: None, .. } | Role::Anonymous => {
                out.anonymous += 1;
                false
            }
            Role::Container(None) | Role::Other => false,
        };
        stack.push(Frame::Leave { pushed });
        let children: Vec<Node<'_>> = node.named_children(&mut cursor).collect();
        stack.extend(children.into_iter().rev().map(Frame::Enter));
    }
    Some(out)
}

fn end_line(node: Node<'_>) -> usize {
    let end = node.end_position();
    if end.column == 0 && end.row > node.start_position().row {
        end.row
    } else {
        end.row + 1
    }
}

fn text(node: Node<'_>, source: &[u8]) -> String {
    let raw = String::from_utf8_lossy(&source[node.byte_range()]);
    raw.split_whitespace().collect()
}

fn field_text(node: Node<'_>, field: &str, source: &[u8]) -> Option<String> {
    node.child_by_field_name(field).map(|n| text(n, source))
}

fn classify<'t>(lang: Language, node: Node<'t>, source: &[u8]) -> Role<'t> {
    let kind = node.kind();
    match lang {
        Language::C | Language::Cpp => classify_c_family(node, kind, source),
        Language::Java => match kind {
            "class_declaration" | "interface_declaration" | "enum_declaration" | "record_declaration"
            | "annotation_type_declaration" => Role::Container(field_text(node, "name", source)),
            "method_declaration" | "constructor_declaration" | "compact_constructor_declaration" => {
                Role::Function {
                    name: field_text(node, "name", source),
                    params: node.child_by_field_name("parameters"),
                }
            }
            "lambda_expression" => Role::Anonymous,
            _ => Role::Other,
        },
        Language::Python => match kind {
            "class_definition" => Role::Container(field_text(node, "name", source)),
            "function_definition" => Role::Function {
                name: field_text(node, "name", source),
                params: node.child_by_field_name("parameters"),
            },
            "lambda" => Role::Anonymous,
            _ => Role::Other,
        },
        Language::JavaScript => classify_javascript(node, kind, source),
        Language::Php => match kind {
            "class_declaration" | "interface_declaration" | "trait_declaration" | "enum_declaration" => {
                Role::Container(field_text(node, "name", source))
            }
            "function_definition" | "method_declaration" => Role::Function {
                name: field_text(node, "name", source),
                params: node.child_by_field_name("parameters"),
            },
            "anonymous_function" | "arrow_function" => Role::Anonymous,
            _ => Role::Other,
        },
        Language::Ruby => match kind {
            "class" | "module" => Role::Container(field_text(node, "name", source)),
            "method" => Role::Function {
                name: field_text(node, "name", source),
                params: node.child_by_field_name("parameters"),
            },
            "singleton_method" => Role::Function {
                name: field_text(node, "name", source).map(|name| {
                    match field_text(node, "object", source) {
                        Some(object) => format!("{object}.{name}"),
                        None => name,
                    }
                }),
                params: node.child_by_field_name("parameters"),
            },
            "lambda" => Role::Anonymous,
            _ => Role::Other,
        },
        Language::CSharp => match kind {
            "class_declaration" | "struct_declaration" | "interface_declaration" | "record_declaration"
            | "namespace_declaration" => Role::Container(field_text(node, "name", source)),
            "method_declaration" | "constructor_declaration" | "local_function_statement" => Role::Function {
                name: field_text(node, "name", source),
                params: node.child_by_field_name("parameters"),
            },
            "destructor_declaration" => Role::Function {
                name: field_text(node, "name", source).map(|n| format!("~{n}")),
                params: node.child_by_field_name("parameters"),
            },
            "operator_declaration" | "conversion_operator_declaration" => Role::Function {
                name: Some(csharp_operator_name(node, source)),
                params: node.child_by_field_name("parameters"),
            },
            "lambda_expression" | "anonymous_method_expression" => Role::Anonymous,
            _ => Role::Other,
        },
    }
}

fn classify_c_family<'t>(node: Node<'t>, kind: &str, source: &[u8]) -> Role<'t> {
    match kind {
        "namespace_definition" | "class_specifier" | "struct_specifier" | "union_specifier" => {
            Role::Container(field_text(node, "name", source))
        }
        "function_definition" => {
            let declarator = node
                .child_by_field_name("declarator")
                .and_then(find_function_declarator);
            match declarator {
                Some(d) => Role::Function {
                    name: field_text(d, "declarator", source),
                    params: d.child_by_field_name("parameters"),
                },
                None => Role::Function {
                    name: None,
                    params: None,
                },
            }
        }
        "lambda_expression" => Role::Anonymous,
        _ => Role::Other,
    }
}

/// Descends through pointer/reference/parenthesized wrappers to the
/// declarator that carries the name and parameter list.
fn find_function_declarator(node: Node<'_>) -> Option<Node<'_>> {
    let mut current = node;
    loop {
        if current.kind() == "function_declarator" {
            return Some(current);
        }
        current = current
            .child_by_field_name("declarator")
            .or_else(|| current.named_child(0))?;
    }
}

fn classify_javascript<'t>(node: Node<'t>, kind: &str, source: &[u8]) -> Role<'t> {
    match kind {
        "class_declaration" | "class" => Role::Container(field_text(node, "name", source)),
        "function_declaration" | "generator_function_declaration" | "method_definition" => Role::Function {
            name: field_text(node, "name", source),
            params: node.child_by_field_name("parameters"),
        },
        "function_expression" | "function" | "generator_function" | "arrow_function" => Role::Function {
            name: javascript_binding_name(node, source),
            params: node
                .child_by_field_name("parameters")
                .or_else(|| node.child_by_field_name("parameter")),
        },
        _ => Role::Other,
    }
}

/// The name a function expression is bound to, when it is bound to one:
/// `const f = () => …`, `obj.f = function () …`, `{ f: function () … }`,
/// or the expression's own name.
fn javascript_binding_name(node: Node<'_>, source: &[u8]) -> Option<String> {
    let parent = node.parent()?;
    match parent.kind() {
        "variable_declarator" => field_text(parent, "name", source),
        "assignment_expression" => {
            let left = parent.child_by_field_name("left")?;
            match left.kind() {
                "member_expression" => field_text(left, "property", source),
                "identifier" => Some(text(left, source)),
                _ => None,
            }
        }
        "pair" => field_text(parent, "key", source),
        _ => None,
    }
    .or_else(|| field_text(node, "name", source))
}

fn csharp_operator_name(node: Node<'_>, source: &[u8]) -> String {
    if node.kind() == "conversion_operator_declaration" {
        let target = field_text(node, "type", source).unwrap_or_default();
        return format!("operator {target}");
    }
    let mut cursor = node.walk();
    let symbol = node
        .children(&mut cursor)
        .skip_while(|c| c.kind() != "operator")
        .nth(1)
        .map(|c| text(c, source))
        .unwrap_or_default();
    format!("operator{symbol}")
}

fn count_params(lang: Language, params: Node<'_>, source: &[u8]) -> usize {
    // JavaScript `x => x`: the parameter field is the identifier itself.
    if lang == Language::JavaScript && params.kind() == "identifier" {
        return 1;
    }
    let kinds: &[&str] = match lang {
        Language::C | Language::Cpp => &[
            "parameter_declaration",
            "optional_parameter_declaration",
            "variadic_parameter_declaration",
            "variadic_parameter",
        ],
        Language::Java => &["formal_parameter", "spread_parameter"],
        Language::Python => &[
            "identifier",
            "typed_parameter",
            "default_parameter",
            "typed_default_parameter",
            "list_splat_pattern",
            "dictionary_splat_pattern",
        ],
        Language::JavaScript => &[
            "identifier",
            "assignment_pattern",
            "rest_pattern",
            "object_pattern",
            "array_pattern",
        ],
        Language::Php => &["simple_parameter", "variadic_parameter", "property_promotion_parameter"],
        Language::Ruby => &[
            "identifier",
            "optional_parameter",
            "splat_parameter",
            "hash_splat_parameter",
            "keyword_parameter",
            "block_parameter",
            "destructured_parameter",
            "forward_parameter",
        ],
        Language::CSharp => &["parameter"],
    };
    let mut cursor = params.walk();
    let found: Vec<Node<'_>> = params
        .named_children(&mut cursor)
        .filter(|c| kinds.contains(&c.kind()))
        .collect();
    // C `f(void)` declares no parameters.
    if matches!(lang, Language::C | Language::Cpp)
        && found.len() == 1
        && found[0].child_by_field_name("declarator").is_none()
        && text(found[0], source) == "void"
    {
        return 0;
    }
    found.len()
}
