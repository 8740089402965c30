//! JSON rendering with `", "` and `": "` separators on a single line, the
//! form used inside prompt blocks (`{"index": 0, "content": "<image>"}`).

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

#[derive(Default)]
struct Spaced;

impl Formatter for Spaced {
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }
}

pub(crate) fn to_spaced_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Spaced);
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization of plain data cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn spaced_separators() {
        let v = json!([{"a": 1}, {"b": "x"}]);
        assert_eq!(to_spaced_string(&v), r#"[{"a": 1}, {"b": "x"}]"#);
        assert_eq!(to_spaced_string(&json!([])), "[]");
    }
}
