//! On-disk framing: `[len: u32 LE][crc32: u32 LE][payload]`.

use std::io;

const HEADER: usize = 8;
const MAX_FRAME: usize = 256 << 20;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Mutation {
    Put { id: String, value: Vec<u8> },
    Delete { id: String },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Record {
    /// All mutations of one transaction that touch one namespace.
    Txn { txn: u64, mutations: Vec<Mutation> },
    Append { id: String, seq: u64, value: Vec<u8> },
    /// Lives only in the COMMITS file.
    Commit { txn: u64 },
}

const TAG_TXN: u8 = 1;
const TAG_APPEND: u8 = 2;
const TAG_COMMIT: u8 = 3;
const OP_PUT: u8 = 0;
const OP_DELETE: u8 = 1;

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    out.extend_from_slice(&(b.len() as u32).to_le_bytes());
    out.extend_from_slice(b);
}

impl Record {
    pub(crate) fn encode(&self) -> Vec<u8> {
        let mut p = Vec::new();
        match self {
            Record::Txn { txn, mutations } => {
                p.push(TAG_TXN);
                p.extend_from_slice(&txn.to_le_bytes());
                p.extend_from_slice(&(mutations.len() as u32).to_le_bytes());
                for m in mutations {
                    match m {
                        Mutation::Put { id, value } => {
                            p.push(OP_PUT);
                            put_bytes(&mut p, id.as_bytes());
                            put_bytes(&mut p, value);
                        }
                        Mutation::Delete { id } => {
                            p.push(OP_DELETE);
                            put_bytes(&mut p, id.as_bytes());
                        }
                    }
                }
            }
            Record::Append { id, seq, value } => {
                p.push(TAG_APPEND);
                put_bytes(&mut p, id.as_bytes());
                p.extend_from_slice(&seq.to_le_bytes());
                put_bytes(&mut p, value);
            }
            Record::Commit { txn } => {
                p.push(TAG_COMMIT);
                p.extend_from_slice(&txn.to_le_bytes());
            }
        }
        let mut frame = Vec::with_capacity(HEADER + p.len());
        frame.extend_from_slice(&(p.len() as u32).to_le_bytes());
        frame.extend_from_slice(&crc32fast::hash(&p).to_le_bytes());
        frame.extend_from_slice(&p);
        frame
    }

    fn decode(p: &[u8]) -> io::Result<Record> {
        let mut r = Reader { buf: p, pos: 0 };
        let rec = match r.u8()? {
            TAG_TXN => {
                let txn = r.u64()?;
                let n = r.u32()?;
                let mut mutations = Vec::with_capacity(n.min(1024) as usize);
                for _ in 0..n {
                    mutations.push(match r.u8()? {
                        OP_PUT => Mutation::Put {
                            id: r.string()?,
                            value: r.bytes()?.to_vec(),
                        },
                        OP_DELETE => Mutation::Delete { id: r.string()? },
                        _ => return Err(bad("unknown mutation op")),
                    });
                }
                Record::Txn { txn, mutations }
            }
            TAG_APPEND => Record::Append {
                id: r.string()?,
                seq: r.u64()?,
                value: r.bytes()?.to_vec(),
            },
            TAG_COMMIT => Record::Commit { txn: r.u64()? },
            _ => return Err(bad("unknown record tag")),
        };
        if r.pos != p.len() {
            return Err(bad("trailing bytes in frame"));
        }
        Ok(rec)
    }
}

fn bad(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> io::Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(bad("truncated record"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> io::Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> io::Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> io::Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn bytes(&mut self) -> io::Result<&'a [u8]> {
        let n = self.u32()? as usize;
        self.take(n)
    }
    fn string(&mut self) -> io::Result<String> {
        String::from_utf8(self.bytes()?.to_vec()).map_err(|_| bad("record id is not utf-8"))
    }
}

/// Decodes frames from the start of `data`. Stops at the first incomplete
/// or corrupt frame and returns the records plus the length of the valid
/// prefix.
pub(crate) fn scan(data: &[u8]) -> (Vec<Record>, usize) {
    let mut out = Vec::new();
    let mut pos = 0;
    while data.len() - pos >= HEADER {
        let len = u32::from_le_bytes(data[pos..pos + 4].try_into().unwrap()) as usize;
        let crc = u32::from_le_bytes(data[pos + 4..pos + 8].try_into().unwrap());
        if len > MAX_FRAME || data.len() - pos - HEADER < len {
            break;
        }
        let payload = &data[pos + HEADER..pos + HEADER + len];
        if crc32fast::hash(payload) != crc {
            break;
        }
        match Record::decode(payload) {
            Ok(rec) => out.push(rec),
            Err(_) => break,
        }
        pos += HEADER + len;
    }
    (out, pos)
}
