// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};

struct Block<'a> {
    info: &'a str,
    body: Vec<&'a str>,
}

fn fenced_blocks(text: &str) -> Vec<Block<'_>> {
    let mut blocks = Vec::new();
    let mut current: Option<Block<'_>> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("```") {
            match current.take() {
                Some(block) => blocks.push(block),
                None => current = Some(Block { info: rest.trim(), body: Vec::new() }),
            }
        } else if let Some(block) = current.as_mut() {
            block.body.push(line);
        }
    }
    // an unterminated fence runs to the end of the text
    if let Some(block) = current {
        blocks.push(block);
    }
    blocks
}

/// Body of the first fenced block tagged `fence_tag`, or of the first fenced
/// block of any tag when none carries it.
pub fn extract_code_block(completion_text: &str, fence_tag: &str) -> Result<String> {
    let blocks = fenced_blocks(completion_text);
    let chosen = blocks
        .iter()
        .find(|b| {
            b.info
                .split_whitespace()
                .next()
                .is_some_and(|t| t.eq_ignore_ascii_case(fence_tag))
        })
        .or_else(|| blocks.first())
        .ok_or_else(|| Error::Extraction { text: completion_text.to_string() })?;

    let mut lines: &[&str] = &chosen.body;
    while let [first, rest @ ..] = lines {
        if first.trim().is_empty() {
            lines = rest;
        } else {
            break;
        }
    }
    while let [rest @ .., last] = lines {
        if last.trim().is_empty() {
            lines = rest;
        } else {
            break;
        }
    }
    Ok(lines.join("\n"))
}
