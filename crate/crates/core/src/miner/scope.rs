//! Brace/signature scanner that assigns source lines to method bodies.

/// Per-line method membership for one file version.
#[derive(Debug, Clone)]
pub struct MethodScopes {
    /// For each raw line, the method whose body is open at the start of the
    /// line: (ordinal, method name).
    owners: Vec<Option<(usize, String)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ScopeError {
    #[error("unbalanced braces")]
    Unbalanced,
    #[error("unterminated comment or literal")]
    Unterminated,
}

#[derive(Debug, Clone, PartialEq)]
enum Block {
    Type,
    Method(usize, String),
    Other,
}

const CONTROL: &[&str] = &[
    "if", "for", "while", "switch", "catch", "synchronized", "try", "else", "do", "finally", "return",
    "new", "throw", "static",
];

const TYPE_KEYWORDS: &[&str] = &["class", "interface", "enum", "record"];

impl MethodScopes {
    pub fn scan(source: &str) -> Result<Self, ScopeError> {
        let mut owners = Vec::new();
        let mut stack: Vec<Block> = Vec::new();
        let mut header = String::new();
        let mut in_block_comment = false;
        let mut method_count = 0;

        for line in source.lines() {
            let owner = stack.iter().rev().find_map(|b| match b {
                Block::Method(id, name) => Some((*id, name.clone())),
                _ => None,
            });
            owners.push(owner);

            let chars: Vec<char> = line.chars().collect();
            let mut i = 0;
            while i < chars.len() {
                let c = chars[i];
                if in_block_comment {
                    if c == '*' && chars.get(i + 1) == Some(&'/') {
                        in_block_comment = false;
                        i += 2;
                    } else {
                        i += 1;
                    }
                    continue;
                }
                match c {
                    '/' if chars.get(i + 1) == Some(&'/') => break,
                    '/' if chars.get(i + 1) == Some(&'*') => {
                        in_block_comment = true;
                        i += 2;
                        continue;
                    }
                    '"' | '\'' => {
                        let mut j = i + 1;
                        loop {
                            match chars.get(j) {
                                None => return Err(ScopeError::Unterminated),
                                Some('\\') => j += 2,
                                Some(&q) if q == c => break,
                                _ => j += 1,
                            }
                        }
                        header.push_str("\"\"");
                        i = j + 1;
                        continue;
                    }
                    '{' => {
                        let block = classify(&header, stack.last(), &mut method_count);
                        stack.push(block);
                        header.clear();
                    }
                    '}' => {
                        if stack.pop().is_none() {
                            return Err(ScopeError::Unbalanced);
                        }
                        header.clear();
                    }
                    ';' => header.clear(),
                    _ => header.push(c),
                }
                i += 1;
            }
            header.push(' ');
        }
        if in_block_comment {
            return Err(ScopeError::Unterminated);
        }
        if !stack.is_empty() {
            return Err(ScopeError::Unbalanced);
        }
        Ok(Self { owners })
    }

    /// Method (ordinal, name) whose body contains the raw line.
    pub fn owner(&self, line: usize) -> Option<(usize, &str)> {
        self.owners
            .get(line)?
            .as_ref()
            .map(|(id, name)| (*id, name.as_str()))
    }

    /// Name of the single method containing every given line, if any.
    pub fn common_method<I: IntoIterator<Item = usize>>(&self, lines: I) -> Option<&str> {
        let mut found: Option<(usize, &str)> = None;
        for line in lines {
            let owner = self.owner(line)?;
            match found {
                None => found = Some(owner),
                Some(prev) if prev.0 == owner.0 => {}
                Some(_) => return None,
            }
        }
        found.map(|(_, name)| name)
    }
}

fn classify(header: &str, parent: Option<&Block>, method_count: &mut usize) -> Block {
    let words: Vec<&str> = header
        .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$'))
        .filter(|w| !w.is_empty())
        .collect();
    if words.iter().any(|w| TYPE_KEYWORDS.contains(w)) && !header.contains('(') {
        return Block::Type;
    }
    if words.iter().any(|w| TYPE_KEYWORDS.contains(w)) && header.contains("record") {
        return Block::Type;
    }
    let in_type_body = matches!(parent, Some(Block::Type));
    if !in_type_body {
        return Block::Other;
    }
    // Method or constructor: `... name ( params ) [throws X]`
    let Some(open) = header.find('(') else {
        return Block::Other;
    };
    if header.contains('=') || header.contains("->") {
        return Block::Other;
    }
    let before = header[..open].trim_end();
    let name: String = before
        .chars()
        .rev()
        .take_while(|c| c.is_alphanumeric() || *c == '_' || *c == '$')
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    if name.is_empty() || CONTROL.contains(&name.as_str()) || !header.contains(')') {
        return Block::Other;
    }
    *method_count += 1;
    Block::Method(*method_count, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = r#"package a;

public class Uptime {
    private long uptime = 0;

    public String getUptime() {
        long days = (long) uptime;
        long hours = (long) ((uptime - days) * 24);
        if (days > 1) {
            return "{" + days;
        }
        return null;
    }

    static {
        init();
    }

    int other(int x)
        throws Exception {
        return x; // }
    }
}
"#;

    #[test]
    fn lines_inside_method_bodies() {
        let s = MethodScopes::scan(SRC).unwrap();
        assert_eq!(s.owner(3), None); // field
        assert_eq!(s.owner(5), None); // signature line
        assert_eq!(s.owner(6).map(|o| o.1), Some("getUptime"));
        assert_eq!(s.owner(9).map(|o| o.1), Some("getUptime"));
        assert_eq!(s.owner(15), None); // static initializer
        assert_eq!(s.owner(20).map(|o| o.1), Some("other"));
        assert_eq!(s.common_method([6, 7, 9]), Some("getUptime"));
        assert_eq!(s.common_method([7, 20]), None);
    }

    #[test]
    fn unbalanced_is_error() {
        assert_eq!(MethodScopes::scan("class A { void f() {").unwrap_err(), ScopeError::Unbalanced);
        assert_eq!(MethodScopes::scan("class A { } }").unwrap_err(), ScopeError::Unbalanced);
        assert_eq!(MethodScopes::scan("class A { /* x").unwrap_err(), ScopeError::Unterminated);
    }

    #[test]
    fn lambdas_and_anonymous_classes_stay_in_enclosing_method() {
        let src = "class A {\n void f() {\n  run(() -> {\n   g();\n  });\n  new Runnable() {\n   public void run() {\n    h();\n   }\n  };\n }\n}\n";
        let s = MethodScopes::scan(src).unwrap();
        assert_eq!(s.owner(3).map(|o| o.1), Some("f"));
        assert_eq!(s.owner(7).map(|o| o.1), Some("f"));
    }
}
