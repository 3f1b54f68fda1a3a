#!/usr/bin/env python3
"""Generate the bundled synthetic training corpus (data/corpus.txt).

The corpus comes from a small probabilistic grammar so the repository stays
self-contained. Output is deterministic for a given --seed.

    python3 scripts/gen_corpus.py --docs 3000 --seed 7 > data/corpus.txt
    python3 scripts/gen_corpus.py --docs 1000 --seed 11 --prompt-words 6 > data/prompts.txt
"""

import argparse
import random

DET = ["the", "a", "this", "that", "every", "one", "some", "each", "another", "no"]
DET_PL = ["the", "some", "many", "few", "these", "those", "several", "most", "all", "two", "three"]

NOUNS = """farmer river village teacher student doctor city garden letter market house road
bridge forest window kitchen mountain journey neighbor child friend government library
business question answer problem story message island harbor ship captain soldier king
queen painter writer engineer machine engine station train winter summer morning evening
night storm wind rain sun moon star valley field horse dog cat bird fish tree flower
stone wall door table chair book paper pen song voice face hand heart mind idea plan
reason history science lesson company office meeting report family brother sister mother
father uncle guest stranger traveler merchant baker hunter lake shore beach desert cave
tower castle church school hospital museum theater restaurant hotel shop street corner
square park island coast path camp fire light shadow dream memory promise secret
decision chance mistake truth opinion argument experiment discovery environment address
knowledge opportunity difference language picture window clock coin box basket bottle
""".split()

VERBS_T = """found saw built carried opened closed painted wrote read watched followed visited
remembered forgot described explained changed moved cleaned fixed sold bought brought
received believed discovered noticed reached crossed left answered asked helped called
carried pushed pulled lifted dropped shared protected studied measured counted started
finished began ended chose lost won kept held raised owned needed wanted loved hated
""".split()

VERBS_I = """arrived waited laughed smiled slept worked walked ran danced sang listened spoke
returned stayed rested traveled wondered disappeared appeared survived agreed
""".split()

ADJ = """old young big small quick slow happy sad quiet loud bright dark warm cold new
ancient strange beautiful interesting different necessary careful clever simple difficult
important famous tired hungry brave kind gentle angry calm busy empty full heavy light
green red blue white black golden wooden narrow wide deep high low rich poor weird
wonderful terrible honest curious lonely proud
""".split()

ADV = """slowly quickly quietly carefully suddenly finally probably really definitely
always never often sometimes again soon together already still nearly
""".split()

PREP = ["in", "on", "near", "across", "behind", "beside", "under", "over", "through",
        "toward", "into", "from", "with", "without", "after", "before", "along", "around"]

TIME = ["yesterday", "tomorrow", "today", "at dawn", "at night", "in the morning",
        "in the evening", "last week", "next year", "after the storm", "until noon",
        "before the beginning of winter"]

SUBJ_PRON = ["he", "she", "they", "we", "I", "you", "it"]

COPULA = {"I": "am", "he": "is", "she": "is", "it": "is", "they": "are", "we": "are", "you": "are"}

NAMES = ["Anna", "Tom", "Maria", "Peter", "Lucy", "John", "Elena", "Omar", "Grace", "Victor"]


def plural(n):
    if n.endswith(("s", "sh", "ch", "x")):
        return n + "es"
    if n.endswith("y") and n[-2] not in "aeiou":
        return n[:-1] + "ies"
    if n == "child":
        return "children"
    return n + "s"


class Grammar:
    def __init__(self, rng):
        self.r = rng

    def pick(self, xs):
        return self.r.choice(xs)

    def np(self):
        roll = self.r.random()
        if roll < 0.08:
            return self.pick(NAMES)
        if roll < 0.30:
            words = [self.pick(DET_PL)]
            if self.r.random() < 0.5:
                words.append(self.pick(ADJ))
            words.append(plural(self.pick(NOUNS)))
            return " ".join(words)
        words = [self.pick(DET)]
        if self.r.random() < 0.45:
            words.append(self.pick(ADJ))
        words.append(self.pick(NOUNS))
        if self.r.random() < 0.15:
            words += ["of", "the", self.pick(NOUNS)]
        return " ".join(words)

    def pp(self):
        return f"{self.pick(PREP)} {self.np()}"

    def vp(self):
        roll = self.r.random()
        if roll < 0.55:
            out = f"{self.pick(VERBS_T)} {self.np()}"
        elif roll < 0.8:
            out = self.pick(VERBS_I)
        else:
            out = f"{self.pick(VERBS_T)} {self.np()} and {self.pick(VERBS_T)} {self.np()}"
        if self.r.random() < 0.4:
            out += " " + self.pp()
        if self.r.random() < 0.2:
            out = self.pick(ADV) + " " + out
        return out

    def clause(self):
        roll = self.r.random()
        if roll < 0.55:
            return f"{self.np()} {self.vp()}"
        if roll < 0.75:
            pron = self.pick(SUBJ_PRON)
            return f"{pron} {self.vp()}"
        if roll < 0.85:
            pron = self.pick(SUBJ_PRON)
            neg = " not" if self.r.random() < 0.3 else ""
            return f"{pron} {COPULA[pron]}{neg} {self.pick(ADJ)}"
        if roll < 0.92:
            pron = self.pick(["I", "we", "they", "you"])
            return f"{pron} do not know why {self.np()} {self.pick(VERBS_I)}"
        return f"it is {self.pick(ADJ)} that {self.np()} {self.vp()}"

    def sentence(self):
        roll = self.r.random()
        if roll < 0.55:
            body = self.clause()
        elif roll < 0.75:
            body = f"{self.clause()} , and {self.clause()}"
        elif roll < 0.85:
            body = f"{self.pick(TIME)} , {self.clause()}"
        elif roll < 0.93:
            body = f"{self.clause()} because {self.clause()}"
        else:
            body = f"{self.clause()} , but {self.clause()}"
        end = "?" if self.r.random() < 0.05 else "."
        body = body[0].upper() + body[1:]
        return f"{body} {end}"

    def document(self):
        n = self.r.randint(3, 8)
        return " ".join(self.sentence() for _ in range(n))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--docs", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--prompt-words", type=int, default=0,
                    help="emit only the first N words of each document")
    args = ap.parse_args()
    g = Grammar(random.Random(args.seed))
    for _ in range(args.docs):
        doc = g.document()
        if args.prompt_words:
            doc = " ".join(doc.split()[: args.prompt_words])
        print(doc)


if __name__ == "__main__":
    main()
