//! Named I/O channels used by `open`, `read` and `printout`.
//!
//! A session's files live either on disk (paths resolved against a root
//! directory) or in an in-memory map supplied by the host. Both backends go
//! through the same router code, so output bytes are identical.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use super::value::Value;
use super::EngineError;
use crate::dsl::STANDARD_ROUTER;
use crate::number::Number;

#[derive(Debug, Clone)]
enum Backend {
    Disk(PathBuf),
    Memory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenMode {
    Read,
    Write,
    Append,
}

impl OpenMode {
    pub fn parse(mode: &str) -> Option<Self> {
        match mode {
            "r" => Some(OpenMode::Read),
            "w" => Some(OpenMode::Write),
            "a" => Some(OpenMode::Append),
            _ => None,
        }
    }
}

/// Host-side I/O configuration for an engine session.
#[derive(Debug, Clone)]
pub struct SessionIo {
    backend: Backend,
    files: BTreeMap<String, Vec<u8>>,
    stdin: Vec<u8>,
    capture_stdout: bool,
}

impl SessionIo {
    /// Files are kept in memory; see [`SessionIo::with_file`].
    pub fn memory() -> Self {
        Self {
            backend: Backend::Memory,
            files: BTreeMap::new(),
            stdin: Vec::new(),
            capture_stdout: true,
        }
    }

    /// File paths in `open` are resolved relative to `root`.
    pub fn disk(root: impl Into<PathBuf>) -> Self {
        Self {
            backend: Backend::Disk(root.into()),
            files: BTreeMap::new(),
            stdin: Vec::new(),
            capture_stdout: false,
        }
    }

    pub fn with_file(mut self, path: impl Into<String>, contents: impl Into<Vec<u8>>) -> Self {
        self.files.insert(path.into(), contents.into());
        self
    }

    pub fn with_stdin(mut self, input: impl Into<Vec<u8>>) -> Self {
        self.stdin = input.into();
        self
    }

    pub fn capture_stdout(mut self, capture: bool) -> Self {
        self.capture_stdout = capture;
        self
    }
}

#[derive(Debug)]
struct Reader {
    data: Vec<u8>,
    pos: usize,
}

impl Reader {
    fn new(data: Vec<u8>) -> Self {
        Self { data, pos: 0 }
    }

    /// Next whitespace-delimited token, typed by its lexical shape. A token
    /// starting with `"` runs to the closing quote and yields a string.
    fn read(&mut self) -> Value {
        let data = &self.data;
        while self.pos < data.len() && data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= data.len() {
            return Value::Eof;
        }
        if data[self.pos] == b'"' {
            self.pos += 1;
            let mut bytes = Vec::new();
            while self.pos < data.len() {
                let b = data[self.pos];
                self.pos += 1;
                match b {
                    b'"' => break,
                    b'\\' if self.pos < data.len() => {
                        bytes.push(data[self.pos]);
                        self.pos += 1;
                    }
                    _ => bytes.push(b),
                }
            }
            return Value::String(String::from_utf8_lossy(&bytes).into_owned());
        }
        let start = self.pos;
        while self.pos < data.len() && !data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let text = String::from_utf8_lossy(&data[start..self.pos]);
        match Number::parse(&text) {
            Some(n) => Value::from(n),
            None => Value::Symbol(text.into_owned()),
        }
    }
}

#[derive(Debug)]
enum Sink {
    File(BufWriter<File>),
    Memory { path: String, buf: Vec<u8> },
}

#[derive(Debug)]
enum Router {
    Input(Reader),
    Output(Sink),
}

#[derive(Debug)]
pub(crate) struct Routers {
    backend: Backend,
    files: BTreeMap<String, Vec<u8>>,
    open: HashMap<String, Router>,
    stdin: Reader,
    stdout: Option<Vec<u8>>,
}

fn io_error(path: &str, err: std::io::Error) -> EngineError {
    EngineError::Io {
        path: path.to_string(),
        message: err.to_string(),
    }
}

impl Routers {
    pub(crate) fn new(io: SessionIo) -> Self {
        Self {
            backend: io.backend,
            files: io.files,
            open: HashMap::new(),
            stdin: Reader::new(io.stdin),
            stdout: io.capture_stdout.then(Vec::new),
        }
    }

    pub(crate) fn open(&mut self, path: &str, name: &str, mode: &str) -> Result<(), EngineError> {
        if name == STANDARD_ROUTER || self.open.contains_key(name) {
            return Err(EngineError::RouterAlreadyOpen(name.to_string()));
        }
        let mode = OpenMode::parse(mode).ok_or_else(|| EngineError::InvalidMode(mode.to_string()))?;
        let router = match (&self.backend, mode) {
            (Backend::Disk(root), OpenMode::Read) => {
                let data = std::fs::read(root.join(path)).map_err(|e| io_error(path, e))?;
                Router::Input(Reader::new(data))
            }
            (Backend::Disk(root), _) => {
                let file = OpenOptions::new()
                    .create(true)
                    .write(true)
                    .append(mode == OpenMode::Append)
                    .truncate(mode == OpenMode::Write)
                    .open(root.join(path))
                    .map_err(|e| io_error(path, e))?;
                Router::Output(Sink::File(BufWriter::new(file)))
            }
            (Backend::Memory, OpenMode::Read) => {
                let data = self.files.get(path).cloned().ok_or_else(|| {
                    io_error(path, std::io::Error::from(std::io::ErrorKind::NotFound))
                })?;
                Router::Input(Reader::new(data))
            }
            (Backend::Memory, _) => {
                let buf = match mode {
                    OpenMode::Append => self.files.get(path).cloned().unwrap_or_default(),
                    _ => Vec::new(),
                };
                Router::Output(Sink::Memory { path: path.to_string(), buf })
            }
        };
        self.open.insert(name.to_string(), router);
        Ok(())
    }

    pub(crate) fn read(&mut self, name: &str) -> Result<Value, EngineError> {
        if name == STANDARD_ROUTER {
            return Ok(self.stdin.read());
        }
        match self.open.get_mut(name) {
            Some(Router::Input(reader)) => Ok(reader.read()),
            _ => Err(EngineError::RouterNotOpen(name.to_string())),
        }
    }

    pub(crate) fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), EngineError> {
        if name == STANDARD_ROUTER {
            return match &mut self.stdout {
                Some(buf) => {
                    buf.extend_from_slice(bytes);
                    Ok(())
                }
                None => std::io::stdout()
                    .write_all(bytes)
                    .map_err(|e| io_error(STANDARD_ROUTER, e)),
            };
        }
        match self.open.get_mut(name) {
            Some(Router::Output(Sink::File(w))) => w.write_all(bytes).map_err(|e| io_error(name, e)),
            Some(Router::Output(Sink::Memory { buf, .. })) => {
                buf.extend_from_slice(bytes);
                Ok(())
            }
            _ => Err(EngineError::RouterNotOpen(name.to_string())),
        }
    }

    /// Flushes and closes every open router. Memory-backed output becomes
    /// visible through [`Routers::file`].
    pub(crate) fn close_all(&mut self) -> Result<(), EngineError> {
        let mut names: Vec<String> = self.open.keys().cloned().collect();
        names.sort();
        let mut first_err = None;
        for name in names {
            match self.open.remove(&name) {
                Some(Router::Output(Sink::File(mut w))) => {
                    if let Err(e) = w.flush() {
                        first_err.get_or_insert(io_error(&name, e));
                    }
                }
                Some(Router::Output(Sink::Memory { path, buf })) => {
                    self.files.insert(path, buf);
                }
                _ => {}
            }
        }
        if self.stdout.is_none() {
            let _ = std::io::stdout().flush();
        }
        first_err.map_or(Ok(()), Err)
    }

    pub(crate) fn file(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(Vec::as_slice)
    }

    pub(crate) fn captured_stdout(&self) -> &[u8] {
        self.stdout.as_deref().unwrap_or_default()
    }

    pub(crate) fn is_open(&self, name: &str) -> bool {
        name == STANDARD_ROUTER || self.open.contains_key(name)
    }
}
