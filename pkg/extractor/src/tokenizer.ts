/**
 * WordPiece tokenization with word-boundary tracking.
 *
 * Words are whitespace-delimited surface words. Each word is cleaned,
 * optionally lowercased/accent-stripped, split around punctuation, and then
 * greedily matched against the vocabulary longest-prefix-first, with "##"
 * continuation pieces. Every subword token produced for a word lands in
 * that word's group, so the group list is a contiguous ordered partition of
 * the token sequence - exactly what the embedding-file format requires.
 */
import { readFileSync } from "node:fs";
import { basename } from "node:path";

export interface Vocabulary {
  /** token string -> id */
  tokens: Map<string, number>;
  /** short identifier recorded in output manifests */
  id: string;
}

export interface TokenizedSentence {
  /** subword token ids, special tokens excluded */
  ids: number[];
  /** one group of token indices per surface word */
  wordGroups: number[][];
  /** surface tokens, for debugging */
  tokens: string[];
  truncated: boolean;
}

export class TokenizationError extends Error {}

export function loadVocabulary(path: string): Vocabulary {
  const raw = readFileSync(path, "utf-8");
  const tokens = new Map<string, number>();
  if (path.endsWith(".json")) {
    const parsed = JSON.parse(raw) as Record<string, number>;
    for (const [token, id] of Object.entries(parsed)) tokens.set(token, id);
  } else {
    raw.split("\n").forEach((line, index) => {
      const token = line.trim();
      if (token) tokens.set(token, index);
    });
  }
  if (tokens.size === 0) throw new TokenizationError(`empty vocabulary: ${path}`);
  return { tokens, id: `${basename(path)}#${tokens.size}` };
}

export interface TokenizerOptions {
  lowercase?: boolean;
  stripAccents?: boolean;
  unkToken?: string;
  maxCharsPerWord?: number;
}

const PUNCTUATION = /[!-/:-@[-`{-~ -⁯　-〿]/u;

function isControl(ch: string): boolean {
  const code = ch.codePointAt(0)!;
  if (code === 0x09 || code === 0x0a || code === 0x0d) return false;
  return (code >= 0 && code < 0x20) || (code >= 0x7f && code < 0xa0) || code === 0xfffd;
}

export class WordPieceTokenizer {
  private readonly vocab: Vocabulary;
  private readonly lowercase: boolean;
  private readonly stripAccents: boolean;
  private readonly unkToken: string;
  private readonly maxCharsPerWord: number;

  constructor(vocab: Vocabulary, options: TokenizerOptions = {}) {
    this.vocab = vocab;
    this.lowercase = options.lowercase ?? false;
    this.stripAccents = options.stripAccents ?? false;
    this.unkToken = options.unkToken ?? "[UNK]";
    this.maxCharsPerWord = options.maxCharsPerWord ?? 100;
    if (!vocab.tokens.has(this.unkToken)) {
      throw new TokenizationError(
        `vocabulary lacks the unknown token ${this.unkToken}`,
      );
    }
  }

  get vocabId(): string {
    return this.vocab.id;
  }

  tokenId(token: string): number {
    const id = this.vocab.tokens.get(token);
    if (id === undefined) {
      throw new TokenizationError(`token ${token} not in vocabulary`);
    }
    return id;
  }

  private normalizeWord(word: string): string {
    let out = "";
    for (const ch of word) {
      if (isControl(ch)) continue;
      out += ch;
    }
    if (this.stripAccents) {
      out = out.normalize("NFD").replace(/\p{Mn}/gu, "");
    }
    if (this.lowercase) out = out.toLowerCase();
    return out;
  }

  /** Split a cleaned word around punctuation; punctuation chars stand alone. */
  private splitPunctuation(word: string): string[] {
    const pieces: string[] = [];
    let current = "";
    for (const ch of word) {
      if (PUNCTUATION.test(ch)) {
        if (current) pieces.push(current);
        pieces.push(ch);
        current = "";
      } else {
        current += ch;
      }
    }
    if (current) pieces.push(current);
    return pieces;
  }

  /** Greedy longest-match wordpieces of one punctuation-free piece. */
  private wordpieces(piece: string): string[] {
    if ([...piece].length > this.maxCharsPerWord) return [this.unkToken];
    const chars = [...piece];
    const pieces: string[] = [];
    let start = 0;
    while (start < chars.length) {
      let end = chars.length;
      let found: string | null = null;
      while (start < end) {
        let candidate = chars.slice(start, end).join("");
        if (start > 0) candidate = "##" + candidate;
        if (this.vocab.tokens.has(candidate)) {
          found = candidate;
          break;
        }
        end -= 1;
      }
      if (found === null) return [this.unkToken];
      pieces.push(found);
      start = end;
    }
    return pieces;
  }

  /**
   * Tokenize one sentence. Token ids exclude special tokens; wordGroups has
   * one entry per whitespace-delimited surface word. Sentences longer than
   * maxTokens are truncated (whole trailing groups first, then the last
   * group partially), never dropped.
   */
  encode(text: string, maxTokens: number = Infinity): TokenizedSentence {
    const words = text.split(/\s+/u).filter((w) => w.length > 0);
    if (words.length === 0) {
      throw new TokenizationError("sentence contains no words");
    }
    const ids: number[] = [];
    const tokens: string[] = [];
    const wordGroups: number[][] = [];
    for (const word of words) {
      const cleaned = this.normalizeWord(word);
      if (cleaned.length === 0) {
        throw new TokenizationError(
          `word ${JSON.stringify(word)} is untokenizable (control characters only)`,
        );
      }
      const group: number[] = [];
      for (const piece of this.splitPunctuation(cleaned)) {
        for (const subword of this.wordpieces(piece)) {
          group.push(ids.length);
          ids.push(this.tokenId(subword));
          tokens.push(subword);
        }
      }
      wordGroups.push(group);
    }

    let truncated = false;
    if (ids.length > maxTokens) {
      truncated = true;
      ids.length = maxTokens;
      tokens.length = maxTokens;
      const kept: number[][] = [];
      for (const group of wordGroups) {
        const cut = group.filter((i) => i < maxTokens);
        if (cut.length > 0) kept.push(cut);
      }
      wordGroups.length = 0;
      wordGroups.push(...kept);
    }
    return { ids, wordGroups, tokens, truncated };
  }
}
