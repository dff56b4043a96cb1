//! Porter's suffix-stripping stemmer, original 1980 rule set.
//!
//! Operates on lowercase ASCII words; anything else is returned unchanged.
//! Words of one or two letters are never stemmed.

/// Stems a single lowercase word.
pub fn stem(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|c| c.is_ascii_lowercase()) {
        return word.to_owned();
    }
    let mut s = Stemmer { b: word.as_bytes().to_vec(), j: 0 };
    s.step1a();
    s.step1b();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    // only ASCII bytes were ever written
    String::from_utf8(s.b).expect("ascii")
}

struct Stemmer {
    b: Vec<u8>,
    /// Length of the stem left by the last successful `ends`.
    j: usize,
}

impl Stemmer {
    fn cons(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.cons(i - 1),
            _ => true,
        }
    }

    /// Number of VC sequences in `b[..j]`.
    fn m(&self) -> usize {
        let j = self.j;
        let mut n = 0;
        let mut i = 0;
        while i < j && self.cons(i) {
            i += 1;
        }
        loop {
            while i < j && !self.cons(i) {
                i += 1;
            }
            if i >= j {
                return n;
            }
            while i < j && self.cons(i) {
                i += 1;
            }
            n += 1;
        }
    }

    fn vowel_in_stem(&self) -> bool {
        (0..self.j).any(|i| !self.cons(i))
    }

    fn double_cons(&self, i: usize) -> bool {
        i >= 1 && self.b[i] == self.b[i - 1] && self.cons(i)
    }

    /// consonant-vowel-consonant ending at `i`, last consonant not w, x or y.
    fn cvc(&self, i: usize) -> bool {
        if i < 2 || !self.cons(i) || self.cons(i - 1) || !self.cons(i - 2) {
            return false;
        }
        !matches!(self.b[i], b'w' | b'x' | b'y')
    }

    fn ends(&mut self, suffix: &str) -> bool {
        let s = suffix.as_bytes();
        if s.len() > self.b.len() || !self.b.ends_with(s) {
            return false;
        }
        self.j = self.b.len() - s.len();
        true
    }

    fn set_to(&mut self, s: &str) {
        self.b.truncate(self.j);
        self.b.extend_from_slice(s.as_bytes());
    }

    fn last(&self) -> usize {
        self.b.len() - 1
    }

    /// Applies the first rule whose suffix matches, provided `m() > min_m`.
    fn apply_first(&mut self, rules: &[(&str, &str)], min_m: usize) {
        for &(suffix, replacement) in rules {
            if self.ends(suffix) {
                if self.m() > min_m {
                    self.set_to(replacement);
                }
                return;
            }
        }
    }

    fn step1a(&mut self) {
        if self.b.last() != Some(&b's') {
            return;
        }
        if self.ends("sses") {
            self.set_to("ss");
        } else if self.ends("ies") {
            self.set_to("i");
        } else if !self.ends("ss") && self.ends("s") {
            self.set_to("");
        }
    }

    fn step1b(&mut self) {
        if self.ends("eed") {
            if self.m() > 0 {
                self.set_to("ee");
            }
            return;
        }
        let stripped = (self.ends("ed") || self.ends("ing")) && self.vowel_in_stem();
        if !stripped {
            return;
        }
        self.set_to("");
        self.j = self.b.len();
        if self.ends("at") {
            self.set_to("ate");
        } else if self.ends("bl") {
            self.set_to("ble");
        } else if self.ends("iz") {
            self.set_to("ize");
        } else if self.double_cons(self.last()) {
            if !matches!(self.b[self.last()], b'l' | b's' | b'z') {
                self.b.pop();
            }
        } else {
            self.j = self.b.len();
            if self.m() == 1 && self.cvc(self.last()) {
                self.b.push(b'e');
            }
        }
    }

    fn step1c(&mut self) {
        if self.ends("y") && self.vowel_in_stem() {
            let k = self.last();
            self.b[k] = b'i';
        }
    }

    fn step2(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("ational", "ate"),
            ("tional", "tion"),
            ("enci", "ence"),
            ("anci", "ance"),
            ("izer", "ize"),
            ("abli", "able"),
            ("alli", "al"),
            ("entli", "ent"),
            ("eli", "e"),
            ("ousli", "ous"),
            ("ization", "ize"),
            ("ation", "ate"),
            ("ator", "ate"),
            ("alism", "al"),
            ("iveness", "ive"),
            ("fulness", "ful"),
            ("ousness", "ous"),
            ("aliti", "al"),
            ("iviti", "ive"),
            ("biliti", "ble"),
        ];
        self.apply_first(RULES, 0);
    }

    fn step3(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("icate", "ic"),
            ("ative", ""),
            ("alize", "al"),
            ("iciti", "ic"),
            ("ical", "ic"),
            ("ful", ""),
            ("ness", ""),
        ];
        self.apply_first(RULES, 0);
    }

    fn step4(&mut self) {
        const SUFFIXES: &[&str] = &[
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion", "ou", "ism", "ate",
            "iti", "ous", "ive", "ize",
        ];
        for &suffix in SUFFIXES {
            if !self.ends(suffix) {
                continue;
            }
            if suffix == "ion" && !(self.j > 0 && matches!(self.b[self.j - 1], b's' | b't')) {
                continue;
            }
            if self.m() > 1 {
                self.set_to("");
            }
            return;
        }
    }

    fn step5(&mut self) {
        self.j = self.b.len();
        if self.b.last() == Some(&b'e') {
            let m = self.m();
            if m > 1 || (m == 1 && !self.cvc(self.last() - 1)) {
                self.b.pop();
            }
        }
        self.j = self.b.len();
        let k = self.last();
        if self.b[k] == b'l' && self.double_cons(k) && self.m() > 1 {
            self.b.pop();
        }
    }
}
