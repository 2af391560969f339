//! Ratings and MOS CSV files.
//!
//! Ratings: `subject_id,video_id,score,timestamp_iso8601`, timestamp optional.
//! MOS: `video_id,mos,rater_count,stddev`.

use std::fs::OpenOptions;
use std::io::{Read, Write};
use std::path::Path;

use super::{MosRow, MosTable, Rating};
use crate::error::{Error, Result};

pub const RATINGS_HEADER: &str = "subject_id,video_id,score,timestamp_iso8601";
pub const MOS_HEADER: &str = "video_id,mos,rater_count,stddev";

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn check_header(found: &csv::StringRecord, expected: &str) -> Result<()> {
    let want: Vec<&str> = expected.split(',').collect();
    let got: Vec<&str> = found.iter().collect();
    // a missing trailing timestamp column is accepted
    if got == want || (want.len() == 4 && want[3] == "timestamp_iso8601" && got == want[..3]) {
        Ok(())
    } else {
        Err(Error::parse(
            1,
            format!("expected header {expected}, found {}", got.join(",")),
        ))
    }
}

fn field<'r>(rec: &'r csv::StringRecord, idx: usize, line: usize, name: &str) -> Result<&'r str> {
    rec.get(idx)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::parse(line, format!("missing {name}")))
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

pub fn parse_ratings(text: &str) -> Result<Vec<Rating>> {
    let mut rdr = reader(text);
    check_header(rdr.headers()?, RATINGS_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let score: f64 = field(&rec, 2, line, "score")?
            .parse()
            .map_err(|e| Error::parse(line, format!("bad score: {e}")))?;
        out.push(Rating {
            subject_id: field(&rec, 0, line, "subject_id")?.to_string(),
            video_id: field(&rec, 1, line, "video_id")?.to_string(),
            score,
            timestamp: rec.get(3).filter(|s| !s.is_empty()).map(String::from),
        });
    }
    Ok(out)
}

pub fn read_ratings(path: &Path) -> Result<Vec<Rating>> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    parse_ratings(&text)
}

fn rating_line(r: &Rating) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record([
        r.subject_id.as_str(),
        r.video_id.as_str(),
        &format_score(r.score),
        r.timestamp.as_deref().unwrap_or(""),
    ])?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn format_score(score: f64) -> String {
    if score.fract() == 0.0 {
        format!("{}", score as i64)
    } else {
        score.to_string()
    }
}

/// Appends one rating, writing the header first when the file is new or
/// empty. The row goes out in a single write call.
pub fn append_rating(path: &Path, rating: &Rating) -> Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut chunk = String::new();
    if file.metadata()?.len() == 0 {
        chunk.push_str(RATINGS_HEADER);
        chunk.push('\n');
    }
    chunk.push_str(&rating_line(rating)?);
    file.write_all(chunk.as_bytes())?;
    file.flush()?;
    Ok(())
}

pub fn render_mos(table: &MosTable) -> String {
    let mut out = String::from(MOS_HEADER);
    out.push('\n');
    for r in &table.rows {
        out.push_str(&format!(
            "{},{:.6},{},{:.6}\n",
            r.video_id, r.mos, r.rater_count, r.stddev
        ));
    }
    out
}

pub fn write_mos(path: &Path, table: &MosTable) -> Result<()> {
    std::fs::write(path, render_mos(table))?;
    Ok(())
}

pub fn parse_mos(text: &str) -> Result<MosTable> {
    let mut rdr = reader(text);
    check_header(rdr.headers()?, MOS_HEADER)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let num = |idx: usize, name: &str| -> Result<f64> {
            field(&rec, idx, line, name)?
                .parse::<f64>()
                .map_err(|e| Error::parse(line, format!("bad {name}: {e}")))
        };
        let rater_count = field(&rec, 2, line, "rater_count")?
            .parse::<usize>()
            .map_err(|e| Error::parse(line, format!("bad rater_count: {e}")))?;
        rows.push(MosRow {
            video_id: field(&rec, 0, line, "video_id")?.to_string(),
            mos: num(1, "mos")?,
            rater_count,
            stddev: num(3, "stddev")?,
            scores: Vec::new(),
        });
    }
    Ok(MosTable {
        rows,
        ..MosTable::default()
    })
}

pub fn read_mos(path: &Path) -> Result<MosTable> {
    parse_mos(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratings_with_and_without_timestamps() {
        let text = "subject_id,video_id,score,timestamp_iso8601\n\
                    s1,v1,4,2024-05-01T10:00:00Z\n\
                    s1,v2,2,\n\
                    s2,v1,3\n";
        let r = parse_ratings(text).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].timestamp.as_deref(), Some("2024-05-01T10:00:00Z"));
        assert_eq!(r[1].timestamp, None);
        assert_eq!(r[2].score, 3.0);
    }

    #[test]
    fn bad_score_reports_line() {
        let text = "subject_id,video_id,score\ns1,v1,4\ns1,v2,x\n";
        match parse_ratings(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn append_creates_header_once() {
        let dir = std::env::temp_dir().join(format!("qoe-ratings-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ratings.csv");
        let _ = std::fs::remove_file(&path);
        for score in [4.0, 2.0] {
            append_rating(
                &path,
                &Rating {
                    subject_id: "s1".into(),
                    video_id: "v,1".into(),
                    score,
                    timestamp: None,
                },
            )
            .unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches(RATINGS_HEADER).count(), 1);
        let back = parse_ratings(&text).unwrap();
        assert_eq!(back[1].video_id, "v,1");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn mos_round_trip() {
        let table = MosTable {
            rows: vec![MosRow {
                video_id: "v1".into(),
                mos: 3.25,
                rater_count: 4,
                stddev: 0.5,
                scores: vec![],
            }],
            ..MosTable::default()
        };
        let back = parse_mos(&render_mos(&table)).unwrap();
        assert_eq!(back.rows, table.rows);
    }
}
