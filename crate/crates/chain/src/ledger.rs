//! Append-only block store with optional file persistence.
//!
//! On disk a ledger is two files in one directory: `blocks.pqb`, a sequence
//! of length-prefixed block encodings, and `blocks.idx`, one
//! `height offset cur_hash_hex` line per block.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pqmiss_core::codec::{put_bytes, Reader};
use pqmiss_core::hash::Digest;

use crate::block::{verify_block, BlockFault, BlockVerifier, FullBlock, ZERO_HASH};
use crate::error::{Error, Result};

pub const BLOCKS_FILE: &str = "blocks.pqb";
pub const INDEX_FILE: &str = "blocks.idx";

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug)]
struct Sink {
    blocks: File,
    index: File,
    offset: u64,
}

impl Sink {
    fn write(&mut self, height: u64, blk: &FullBlock) -> Result<()> {
        let mut rec = Vec::new();
        put_bytes(&mut rec, &blk.encode());
        self.blocks.write_all(&rec)?;
        self.blocks.flush()?;
        writeln!(self.index, "{height} {} {}", self.offset, hex(&blk.cur_hash))?;
        self.offset += rec.len() as u64;
        Ok(())
    }
}

#[derive(Debug)]
pub struct Ledger {
    blocks: Vec<FullBlock>,
    hashes: HashSet<Digest>,
    sink: Option<Sink>,
}

impl Ledger {
    /// In-memory ledger rooted at `genesis`.
    pub fn new(genesis: FullBlock) -> Self {
        let hashes = HashSet::from([genesis.cur_hash]);
        Self {
            blocks: vec![genesis],
            hashes,
            sink: None,
        }
    }

    /// Creates `dir` with a fresh ledger file pair; fails if one exists.
    pub fn create(dir: &Path, genesis: FullBlock) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let open = |name: &str| OpenOptions::new().append(true).create_new(true).open(dir.join(name));
        let mut sink = Sink {
            blocks: open(BLOCKS_FILE)?,
            index: open(INDEX_FILE)?,
            offset: 0,
        };
        sink.write(0, &genesis)?;
        let mut ledger = Self::new(genesis);
        ledger.sink = Some(sink);
        Ok(ledger)
    }

    /// Reloads and audits a persisted ledger, then keeps appending to it.
    pub fn open(dir: &Path, verifier: &dyn BlockVerifier) -> Result<Self> {
        let data = fs::read(dir.join(BLOCKS_FILE))?;
        let mut r = Reader::new(&data);
        let mut blocks = Vec::new();
        while r.remaining() > 0 {
            blocks.push(FullBlock::decode(r.bytes()?)?);
        }
        let mut iter = blocks.into_iter();
        let genesis = iter.next().ok_or_else(|| Error::Malformed("empty ledger file".into()))?;
        let mut ledger = Self::new(genesis);
        for blk in iter {
            ledger.append(blk, verifier)?;
        }
        ledger.audit(verifier).map_err(|(_, f)| Error::InvalidBlock(f))?;
        let append = |name: &str| OpenOptions::new().append(true).open(dir.join(name));
        ledger.sink = Some(Sink {
            blocks: append(BLOCKS_FILE)?,
            index: append(INDEX_FILE)?,
            offset: data.len() as u64,
        });
        Ok(ledger)
    }

    /// Writes a snapshot of the whole chain into `dir` without attaching it.
    pub fn export(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let mut blocks = BufWriter::new(File::create(dir.join(BLOCKS_FILE))?);
        let mut index = BufWriter::new(File::create(dir.join(INDEX_FILE))?);
        let mut offset = 0u64;
        for (h, blk) in self.blocks.iter().enumerate() {
            let mut rec = Vec::new();
            put_bytes(&mut rec, &blk.encode());
            blocks.write_all(&rec)?;
            writeln!(index, "{h} {offset} {}", hex(&blk.cur_hash))?;
            offset += rec.len() as u64;
        }
        blocks.flush()?;
        index.flush()?;
        Ok(dir.join(BLOCKS_FILE))
    }

    /// Genesis has height 0.
    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn tip(&self) -> &FullBlock {
        self.blocks.last().expect("a ledger always holds genesis")
    }

    pub fn tip_hash(&self) -> Digest {
        self.tip().cur_hash
    }

    pub fn blocks(&self) -> &[FullBlock] {
        &self.blocks
    }

    pub fn contains(&self, hash: &Digest) -> bool {
        self.hashes.contains(hash)
    }

    /// Verifies `blk` against the tip and appends it.
    pub fn append(&mut self, blk: FullBlock, verifier: &dyn BlockVerifier) -> Result<()> {
        if self.contains(&blk.cur_hash) {
            return Err(Error::DuplicateBlock(hex(&blk.cur_hash)));
        }
        verify_block(&blk, &self.tip_hash(), verifier).map_err(Error::InvalidBlock)?;
        if let Some(sink) = self.sink.as_mut() {
            sink.write(self.blocks.len() as u64, &blk)?;
        }
        self.hashes.insert(blk.cur_hash);
        self.blocks.push(blk);
        Ok(())
    }

    /// Re-verifies every block and every link; returns the first bad height.
    pub fn audit(&self, verifier: &dyn BlockVerifier) -> std::result::Result<(), (u64, BlockFault)> {
        let mut prev = ZERO_HASH;
        for (h, blk) in self.blocks.iter().enumerate() {
            verify_block(blk, &prev, verifier).map_err(|f| (h as u64, f))?;
            prev = blk.cur_hash;
        }
        Ok(())
    }

    /// Canonical bytes of the whole chain, for agreement checks.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for blk in &self.blocks {
            put_bytes(&mut out, &blk.encode());
        }
        out
    }
}
