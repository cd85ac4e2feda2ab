//! CSV persistence of experiment records.

use std::io::{Read, Write};
use std::path::Path;

use crate::codecs::format_f64;
use crate::error::{Error, Result};
use crate::metrics::{ExperimentRecord, StageTimings};

pub const CSV_HEADER: [&str; 15] = [
    "mode",
    "op",
    "n",
    "rate_bps",
    "codec",
    "rep",
    "t_local_s",
    "t_enc_cli_s",
    "t_request_s",
    "t_dec_cli_s",
    "t_srv_dec_s",
    "t_srv_exec_s",
    "t_srv_enc_s",
    "req_bytes",
    "resp_bytes",
];

/// Streams records to CSV, header first. Floats use the shortest
/// round-tripping decimal form, so re-reading is lossless.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        inner.write_record(CSV_HEADER)?;
        Ok(RecordWriter { inner })
    }

    pub fn write(&mut self, r: &ExperimentRecord) -> Result<()> {
        let t = &r.timings;
        self.inner.write_record([
            r.mode.name().to_string(),
            r.op.name().to_string(),
            r.n.to_string(),
            r.rate_bps.to_string(),
            r.codec.clone(),
            r.rep.to_string(),
            format_f64(r.t_local),
            format_f64(t.t_encode_client),
            format_f64(t.t_request),
            format_f64(t.t_decode_client),
            format_f64(t.t_srv_decode),
            format_f64(t.t_srv_exec),
            format_f64(t.t_srv_encode),
            r.req_bytes.to_string(),
            r.resp_bytes.to_string(),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, row: usize) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("");
    raw.trim()
        .parse()
        .map_err(|_| Error::Schema(format!("row {row}: column {} has unparsable value {raw:?}", CSV_HEADER[idx])))
}

pub fn read_records(r: impl Read) -> Result<Vec<ExperimentRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Schema(format!(
            "expected header {:?}, found {:?}",
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Schema(e.to_string()))?;
        let row = i + 2;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Schema(format!("row {row}: expected {} columns, got {}", CSV_HEADER.len(), rec.len())));
        }
        out.push(ExperimentRecord {
            mode: field(&rec, 0, row)?,
            op: field(&rec, 1, row)?,
            n: field(&rec, 2, row)?,
            rate_bps: field(&rec, 3, row)?,
            codec: rec[4].to_string(),
            rep: field(&rec, 5, row)?,
            t_local: field(&rec, 6, row)?,
            timings: StageTimings {
                t_encode_client: field(&rec, 7, row)?,
                t_request: field(&rec, 8, row)?,
                t_decode_client: field(&rec, 9, row)?,
                t_srv_decode: field(&rec, 10, row)?,
                t_srv_exec: field(&rec, 11, row)?,
                t_srv_encode: field(&rec, 12, row)?,
            },
            req_bytes: field(&rec, 13, row)?,
            resp_bytes: field(&rec, 14, row)?,
        });
    }
    Ok(out)
}

pub fn read_records_file(path: impl AsRef<Path>) -> Result<Vec<ExperimentRecord>> {
    read_records(std::fs::File::open(path)?)
}

pub fn write_records_file(path: impl AsRef<Path>, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = RecordWriter::new(std::io::BufWriter::new(std::fs::File::create(path)?))?;
    for r in records {
        w.write(r)?;
    }
    w.finish()?.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Mode;
    use crate::workloads::OpKind;
    use proptest::prelude::*;

    fn sample(t: [f64; 7]) -> ExperimentRecord {
        ExperimentRecord {
            mode: Mode::Live,
            op: OpKind::Inv,
            n: 100,
            rate_bps: 10_000_000,
            codec: "TEXT-fast".into(),
            rep: 3,
            t_local: t[0],
            timings: StageTimings {
                t_encode_client: t[1],
                t_request: t[2],
                t_decode_client: t[3],
                t_srv_decode: t[4],
                t_srv_exec: t[5],
                t_srv_encode: t[6],
            },
            req_bytes: 80_012,
            resp_bytes: 80_012,
        }
    }

    #[test]
    fn header_is_exact() {
        let w = RecordWriter::new(Vec::new()).unwrap();
        let bytes = w.finish().unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "mode,op,n,rate_bps,codec,rep,t_local_s,t_enc_cli_s,t_request_s,t_dec_cli_s,t_srv_dec_s,t_srv_exec_s,t_srv_enc_s,req_bytes,resp_bytes\n"
        );
    }

    #[test]
    fn row_format() {
        let mut w = RecordWriter::new(Vec::new()).unwrap();
        w.write(&sample([0.5, 1e-5, 0.25, 0.0, 1.0, 2.0, 3.0])).unwrap();
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "live,INV,100,10000000,TEXT-fast,3,0.5,1e-5,0.25,0.0,1.0,2.0,3.0,80012,80012"
        );
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(read_records(&b"a,b,c\n1,2,3\n"[..]), Err(Error::Schema(_))));
        let mut text = CSV_HEADER.join(",");
        text.push_str("\nmodel,MUL,4,10,RAW,0,x,0,0,0,0,0,0,1,1\n");
        match read_records(text.as_bytes()) {
            Err(Error::Schema(m)) => assert!(m.contains("t_local_s"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn written_records_reread_identically(
            times in proptest::array::uniform7(0.0..1e4f64),
        ) {
            let recs = vec![sample(times), sample([times[0] * 1e-9, 0.0, 5e-324, 1e17, 0.1, 0.2, 0.3])];
            let mut w = RecordWriter::new(Vec::new()).unwrap();
            for r in &recs {
                w.write(r).unwrap();
            }
            let bytes = w.finish().unwrap();
            prop_assert_eq!(read_records(&bytes[..]).unwrap(), recs);
        }
    }
}
