//! Documents file: one record per user, each a little-endian `u32` byte
//! length, that many bytes of JSON, then `\n`.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use super::UserDocument;
use crate::error::{Error, Result};

pub fn write_documents(path: &Path, docs: &[UserDocument]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for doc in docs {
        let body = serde_json::to_vec(doc).map_err(|e| Error::format("documents file", e.to_string()))?;
        let len = u32::try_from(body.len())
            .map_err(|_| Error::format("documents file", "record exceeds 4 GiB"))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(&body)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_documents(path: &Path) -> Result<Vec<UserDocument>> {
    let file = File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut r = BufReader::new(file);
    let mut docs = Vec::new();
    loop {
        let mut len = [0u8; 4];
        match r.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let mut body = vec![0u8; u32::from_le_bytes(len) as usize + 1];
        r.read_exact(&mut body)
            .map_err(|_| Error::format("documents file", format!("record {} truncated", docs.len())))?;
        if body.pop() != Some(b'\n') {
            return Err(Error::format(
                "documents file",
                format!("record {} lacks its newline terminator", docs.len()),
            ));
        }
        let doc = serde_json::from_slice(&body)
            .map_err(|e| Error::format("documents file", format!("record {}: {e}", docs.len())))?;
        docs.push(doc);
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;

    #[test]
    fn roundtrip_with_embedded_newlines() {
        let doc = UserDocument {
            user_id: "u\n1".into(),
            tokens: vec!["a".into()],
            raw_texts: vec!["line one\nline two\u{0}".into()],
            hours: vec![0, 23],
            gt_longitude: -73.5,
            gt_latitude: 40.25,
            gt_label: "NE".into(),
            split: Split::Validation,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("docs.bin");
        write_documents(&p, &[doc.clone(), doc.clone()]).unwrap();
        assert_eq!(read_documents(&p).unwrap(), vec![doc.clone(), doc]);
    }

    #[test]
    fn truncated_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("docs.bin");
        std::fs::write(&p, [10u8, 0, 0, 0, b'{']).unwrap();
        assert!(matches!(read_documents(&p), Err(Error::Format { .. })));
    }
}
