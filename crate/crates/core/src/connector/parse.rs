use std::collections::{BTreeMap, HashMap};

use super::{is_identifier, Channel, ChannelKind, Connector, ConnectorError, NodeKind};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() || c == ',' {
            if let Some(s) = start.take() {
                out.push(Token { text: &line[s..i], column: s + 1 });
            }
            if c == ',' {
                out.push(Token { text: ",", column: i + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &line[s..], column: s + 1 });
    }
    out
}

struct LineParser<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_column: usize,
}

impl<'a> LineParser<'a> {
    fn error(&self, column: usize, message: impl Into<String>) -> ConnectorError {
        ConnectorError::Syntax { line: self.line, column, message: message.into() }
    }

    fn next_column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end_column, |t| t.column)
    }

    fn expect_any(&mut self, what: &str) -> Result<&'a str, ConnectorError> {
        match self.tokens.get(self.pos) {
            Some(t) if t.text != "," => {
                self.pos += 1;
                Ok(t.text)
            }
            _ => Err(self.error(self.next_column(), format!("expected {what}"))),
        }
    }

    fn identifier(&mut self, what: &str) -> Result<&'a str, ConnectorError> {
        let column = self.next_column();
        let text = self.expect_any(what)?;
        if !is_identifier(text) {
            return Err(self.error(column, format!("`{text}` is not a valid {what}")));
        }
        Ok(text)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ConnectorError> {
        let column = self.next_column();
        let text = self.expect_any(&format!("`{kw}`"))?;
        if text != kw {
            return Err(self.error(column, format!("expected `{kw}`, found `{text}`")));
        }
        Ok(())
    }

    /// `<item> [, <item> ...]`
    fn list(&mut self, what: &str, ident: bool) -> Result<Vec<&'a str>, ConnectorError> {
        let mut out = vec![if ident { self.identifier(what)? } else { self.expect_any(what)? }];
        while self.tokens.get(self.pos).is_some_and(|t| t.text == ",") {
            self.pos += 1;
            out.push(if ident { self.identifier(what)? } else { self.expect_any(what)? });
        }
        Ok(out)
    }

    fn finish(&self) -> Result<(), ConnectorError> {
        match self.tokens.get(self.pos) {
            Some(t) => Err(self.error(t.column, format!("unexpected `{}`", t.text))),
            None => Ok(()),
        }
    }
}

/// Parses and validates connector source text.
///
/// ```text
/// connector <name>
/// boundary_source <node> [, <node> ...]
/// boundary_sink   <node> [, <node> ...]
/// node            <node> [, <node> ...]
/// sync      <id> <src> -> <snk>
/// syncdrain <id> <a> -- <b>
/// fifo1     <id> <src> -> <snk>
/// fifo1full <id> <src> -> <snk> init <literal>
/// domain    <lit> [, <lit> ...]
/// ```
pub fn parse_connector(text: &str) -> Result<Connector, ConnectorError> {
    let mut name: Option<String> = None;
    let mut nodes: BTreeMap<String, NodeKind> = BTreeMap::new();
    let mut channels: Vec<Channel> = Vec::new();
    let mut domain: Option<Vec<String>> = None;
    let mut lines: HashMap<String, usize> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        if tokens.is_empty() {
            continue;
        }
        let mut lp = LineParser { line: line_no, tokens, pos: 1, end_column: content.len() + 1 };
        let head = lp.tokens[0].text;
        let head_column = lp.tokens[0].column;
        if name.is_none() && head != "connector" {
            return Err(lp.error(head_column, "expected `connector <name>` before any declaration"));
        }
        match head {
            "connector" => {
                if name.is_some() {
                    return Err(lp.error(head_column, "duplicate `connector` header"));
                }
                name = Some(lp.identifier("connector name")?.to_string());
            }
            "boundary_source" | "boundary_sink" | "node" => {
                let kind = match head {
                    "boundary_source" => NodeKind::Source,
                    "boundary_sink" => NodeKind::Sink,
                    _ => NodeKind::Internal,
                };
                for n in lp.list("node name", true)? {
                    if nodes.insert(n.to_string(), kind).is_some() {
                        return Err(ConnectorError::Validation {
                            line: Some(line_no),
                            message: format!("node `{n}` declared twice"),
                        });
                    }
                    lines.insert(n.to_string(), line_no);
                }
            }
            "sync" | "fifo1" | "fifo1full" | "syncdrain" => {
                let id = lp.identifier("channel id")?;
                let src = lp.identifier("node name")?;
                lp.keyword(if head == "syncdrain" { "--" } else { "->" })?;
                let snk = lp.identifier("node name")?;
                let kind = match head {
                    "sync" => ChannelKind::Sync,
                    "fifo1" => ChannelKind::Fifo1,
                    "syncdrain" => ChannelKind::SyncDrain,
                    _ => {
                        lp.keyword("init")?;
                        ChannelKind::Fifo1Full(lp.expect_any("literal")?.to_string())
                    }
                };
                if lines.insert(id.to_string(), line_no).is_some() && channels.iter().any(|c| c.id == id) {
                    return Err(ConnectorError::Validation {
                        line: Some(line_no),
                        message: format!("duplicate channel id `{id}`"),
                    });
                }
                channels.push(Channel { id: id.into(), kind, src: src.into(), snk: snk.into() });
            }
            "domain" => {
                if domain.is_some() {
                    return Err(lp.error(head_column, "duplicate `domain` declaration"));
                }
                domain = Some(lp.list("literal", false)?.into_iter().map(String::from).collect());
                lines.insert("domain".into(), line_no);
            }
            other => return Err(lp.error(head_column, format!("unknown declaration `{other}`"))),
        }
        lp.finish()?;
    }

    let Some(name) = name else {
        return Err(ConnectorError::Syntax { line: 1, column: 1, message: "missing `connector <name>` header".into() });
    };
    let c = Connector { name, nodes, channels, domain };
    c.validate(&lines)?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_sync_connector() {
        let c = parse_connector("connector s\nboundary_source A\nboundary_sink B\nsync c1 A -> B\n").unwrap();
        assert_eq!(c.nodes().len(), 2);
        assert_eq!(c.channels().len(), 1);
        assert_eq!(c.channels()[0].kind, ChannelKind::Sync);
    }

    #[test]
    fn undeclared_node_names_the_node_and_line() {
        let err = parse_connector("connector s\nboundary_sink B\nfifo1 f X -> B\n").unwrap_err();
        match err {
            ConnectorError::Validation { line, message } => {
                assert_eq!(line, Some(3));
                assert!(message.contains("`X`"), "{message}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_connector("connector s\nboundary_source A\nsync c1 A => B\n").unwrap_err();
        assert_eq!(err, ConnectorError::Syntax { line: 3, column: 11, message: "expected `->`, found `=>`".into() });
        let err = parse_connector("connector s\nwibble x\n").unwrap_err();
        assert!(matches!(err, ConnectorError::Syntax { line: 2, column: 1, .. }));
        let err = parse_connector("connector s\nsync c1 A -> \n").unwrap_err();
        assert!(matches!(err, ConnectorError::Syntax { line: 2, column: 14, .. }), "{err:?}");
    }

    #[test]
    fn comments_lists_and_domain() {
        let src = "# header\nconnector m  # trailing\ndomain x, y\nboundary_source A, B\nboundary_sink Z\nnode M\n\
                   fifo1full f1 A -> M init y\nfifo1 f2 B -> M\nsync s M -> Z\n";
        let c = parse_connector(src).unwrap();
        assert_eq!(c.declared_domain(), Some(&["x".to_string(), "y".to_string()][..]));
        assert_eq!(c.nodes().len(), 4);
        assert_eq!(parse_connector(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn header_must_come_first() {
        assert!(matches!(parse_connector("boundary_source A\n").unwrap_err(), ConnectorError::Syntax { line: 1, .. }));
        assert!(parse_connector("").is_err());
    }

    #[test]
    fn duplicate_node_is_rejected() {
        let err = parse_connector("connector d\nboundary_source A\nnode A\nsync c A -> A\n").unwrap_err();
        assert!(matches!(err, ConnectorError::Validation { line: Some(3), .. }));
    }
}
