//! Checkpoint container: a version tag followed by named entries, each a
//! tensor (shape plus little-endian `f64` payload) or an opaque blob.
//! Entry order is preserved, so writing a decoded container reproduces the
//! input bytes exactly.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{AdamState, Array, ParamSet};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"ORGN";
pub const CONTAINER_VERSION: u32 = 1;
const TENSOR: u8 = 1;
const BLOB: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Tensor(Array),
    Blob(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Container {
    entries: Vec<(String, Entry)>,
}

fn bad(what: impl Into<String>) -> Error {
    Error::Format(format!("container: {}", what.into()))
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).ok_or_else(|| bad("truncated"))?;
        let s = self.bytes.get(self.at..end).ok_or_else(|| bad("truncated"))?;
        self.at = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| bad("length overflow"))
    }
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[(String, Entry)] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    /// Replaces an entry of the same name in place, otherwise appends.
    pub fn put(&mut self, name: impl Into<String>, entry: Entry) {
        let name = name.into();
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = entry,
            None => self.entries.push((name, entry)),
        }
    }

    pub fn put_tensor(&mut self, name: impl Into<String>, value: Array) {
        self.put(name, Entry::Tensor(value));
    }

    pub fn put_blob(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.put(name, Entry::Blob(bytes));
    }

    pub fn tensor(&self, name: &str) -> Result<&Array> {
        match self.get(name) {
            Some(Entry::Tensor(a)) => Ok(a),
            Some(Entry::Blob(_)) => Err(bad(format!("{name} is not a tensor"))),
            None => Err(bad(format!("missing entry {name}"))),
        }
    }

    pub fn blob(&self, name: &str) -> Result<&[u8]> {
        match self.get(name) {
            Some(Entry::Blob(b)) => Ok(b),
            Some(Entry::Tensor(_)) => Err(bad(format!("{name} is not a blob"))),
            None => Err(bad(format!("missing entry {name}"))),
        }
    }

    pub fn text(&self, name: &str) -> Result<&str> {
        core::str::from_utf8(self.blob(name)?).map_err(|_| bad(format!("{name} is not UTF-8")))
    }

    /// Every parameter under its own name.
    pub fn put_params(&mut self, params: &ParamSet) {
        for p in params.iter() {
            self.put_tensor(p.name.clone(), p.value.clone());
        }
    }

    /// Loads every parameter of `params` by name; shapes must match.
    pub fn load_params(&self, params: &mut ParamSet) -> Result<()> {
        let named = params.iter().map(|p| Ok((p.name.clone(), self.tensor(&p.name)?.clone()))).collect::<Result<Vec<_>>>()?;
        params.assign(&named)
    }

    /// Adam hyperparameters and moments under `prefix`, keyed by the
    /// parameter names they belong to.
    pub fn put_adam(&mut self, prefix: &str, opt: &AdamState, params: &ParamSet) -> Result<()> {
        if opt.first_moment.len() != params.len() || opt.second_moment.len() != params.len() {
            return Err(bad(format!("{prefix}: optimizer has {} moments for {} parameters", opt.first_moment.len(), params.len())));
        }
        let mut hyper = Vec::with_capacity(40);
        hyper.extend_from_slice(&opt.step_count.to_le_bytes());
        for x in [opt.learning_rate, opt.beta1, opt.beta2, opt.epsilon] {
            hyper.extend_from_slice(&x.to_le_bytes());
        }
        self.put_blob(format!("{prefix}.hyper"), hyper);
        for (i, p) in params.iter().enumerate() {
            self.put_tensor(format!("{prefix}.m.{}", p.name), opt.first_moment[i].clone());
            self.put_tensor(format!("{prefix}.v.{}", p.name), opt.second_moment[i].clone());
        }
        Ok(())
    }

    pub fn load_adam(&self, prefix: &str, params: &ParamSet) -> Result<AdamState> {
        let mut r = Reader { bytes: self.blob(&format!("{prefix}.hyper"))?, at: 0 };
        let step_count = r.u64()?;
        let mut f = || r.u64().map(f64::from_bits);
        let (learning_rate, beta1, beta2, epsilon) = (f()?, f()?, f()?, f()?);
        let mut first_moment = Vec::with_capacity(params.len());
        let mut second_moment = Vec::with_capacity(params.len());
        for p in params.iter() {
            for (key, out) in [("m", &mut first_moment), ("v", &mut second_moment)] {
                let a = self.tensor(&format!("{prefix}.{key}.{}", p.name))?;
                if a.shape() != p.value.shape() {
                    return Err(bad(format!("{prefix}: moment shape {:?} for {} {:?}", a.shape(), p.name, p.value.shape())));
                }
                out.push(a.clone());
            }
        }
        Ok(AdamState { step_count, learning_rate, beta1, beta2, epsilon, first_moment, second_moment })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for (name, entry) in &self.entries {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            match entry {
                Entry::Tensor(a) => {
                    out.push(TENSOR);
                    out.extend_from_slice(&(a.shape().len() as u32).to_le_bytes());
                    for &d in a.shape() {
                        out.extend_from_slice(&(d as u64).to_le_bytes());
                    }
                    for x in a.data() {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
                Entry::Blob(b) => {
                    out.push(BLOB);
                    out.extend_from_slice(&(b.len() as u64).to_le_bytes());
                    out.extend_from_slice(b);
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = r.u32()?;
        if version != CONTAINER_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let count = r.len()?;
        let mut entries: Vec<(String, Entry)> = Vec::new();
        for _ in 0..count {
            let n = r.u32()? as usize;
            let name = core::str::from_utf8(r.take(n)?).map_err(|_| bad("entry name is not UTF-8"))?.to_string();
            if entries.iter().any(|(e, _)| *e == name) {
                return Err(bad(format!("duplicate entry {name}")));
            }
            let entry = match r.u8()? {
                TENSOR => {
                    let ndim = r.u32()? as usize;
                    let shape = (0..ndim).map(|_| r.len()).collect::<Result<Vec<_>>>()?;
                    let size = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| bad("shape overflow"))?;
                    let raw = r.take(size.checked_mul(8).ok_or_else(|| bad("shape overflow"))?)?;
                    let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
                    Entry::Tensor(Array::from_vec(&shape, data).map_err(|e| bad(format!("{name}: {e}")))?)
                }
                BLOB => {
                    let n = r.len()?;
                    Entry::Blob(r.take(n)?.to_vec())
                }
                k => return Err(bad(format!("unknown entry kind {k}"))),
            };
            entries.push((name, entry));
        }
        if r.at != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(Self { entries })
    }
}
