#!/usr/bin/env python3
"""Writes the bundled toy corpus: ~50 short wire-style articles over three topics.

The output is fully determined by --seed, so the committed data/toy/corpus.jsonl can be
regenerated byte for byte.
"""

import argparse
import json
import random

PEOPLE = ["Kim Jong Un", "Moon Jae-in", "Donald Trump", "Barack Obama", "Mark Zuckerberg", "Julian Assange",
          "Nancy Pelosi", "Mike Pompeo", "James Comey", "Robert Mueller"]
CITIES = ["Pyongyang", "Seoul", "Washington", "California", "Florida", "Mexico City", "Beijing", "Tokyo"]
DAYS = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"]
NUMBERS = ["two", "three", "four", "five", "several", "dozens of", "hundreds of", "thousands of"]
OFFICIALS = ["officials", "diplomats", "analysts", "lawmakers", "experts", "advisers", "spokesmen"]

TOPICS = {
    "korea": {
        "titles": [
            "Pyongyang signals new talks with Seoul",
            "North Korea tests another missile",
            "Korean leaders meet at the border",
            "Sanctions bite as Pyongyang seeks aid",
            "Kim Jong Un tours rocket factory",
            "Koreas agree to reunite families",
        ],
        "sentences": [
            "North Korea said on {day} that it would continue its missile program despite new sanctions.",
            "State media in Pyongyang reported that Kim Jong Un had inspected a new rocket engine.",
            "South Korean {officials} said the launch was the {ordinal} this year.",
            "The talks between the two Koreas were held in the border village of Panmunjom.",
            "Pyongyang has repeatedly warned that it will not give up its nuclear weapons.",
            "{number} {officials} from Seoul travelled north to prepare the summit.",
            "The North Korean leader called the test a great success for the Korean people.",
            "Satellite images showed new construction near the Yongbyon nuclear site.",
            "Families separated by the Korean War were allowed to meet for {number} days.",
            "China remains the largest trading partner of North Korea.",
            "The United Nations imposed fresh sanctions on Pyongyang in response.",
            "Seoul said it would keep the door open for dialogue with the North.",
            "Korean state television showed crowds celebrating in the capital.",
            "{person} said the peninsula must be free of nuclear weapons.",
            "Analysts in Seoul believe the regime is trying to gain leverage before talks.",
        ],
    },
    "politics": {
        "titles": [
            "Trump signs order on border security",
            "Washington braces for budget fight",
            "FBI director testifies before Congress",
            "California sues over new rules",
            "Obama returns to the campaign trail",
            "Florida recount ends after weeks",
        ],
        "sentences": [
            "President Trump said on {day} that the deal was the best in American history.",
            "Lawmakers in Washington failed to agree on a budget before the deadline.",
            "The FBI has opened an inquiry into the campaign donations.",
            "California officials said they would challenge the order in court.",
            "{person} told reporters at the White House that the policy would not change.",
            "Former president Obama urged American voters to turn out in November.",
            "The border wall with Mexico remains the most divisive issue in Congress.",
            "Florida election officials began a manual recount of {number} ballots.",
            "Republicans and Democrats blamed each other for the shutdown.",
            "{number} {officials} resigned from the administration this year.",
            "The Senate voted to confirm the nominee after a long debate.",
            "Polls show that most Americans want a compromise on immigration.",
            "The governor of California announced a new climate plan on {day}.",
            "Critics in Washington said the plan would cost billions of dollars.",
            "The White House did not respond to a request for comment.",
        ],
    },
    "media": {
        "titles": [
            "Fake stories spread faster than the truth",
            "Journalists targeted by surveillance program",
            "Whistleblower reveals intelligence files",
            "Social networks fight false news",
            "Reporter arrested after leak allegations",
            "WikiLeaks publishes secret cables",
        ],
        "sentences": [
            "A new study found that fake stories spread faster than true ones on social media.",
            "Journalists said the surveillance program violated the freedom of the press.",
            "The whistleblower handed {number} intelligence documents to a reporter.",
            "Mark Zuckerberg said the company would hire more people to remove false content.",
            "WikiLeaks published the cables on {day} despite legal threats.",
            "The allegations were described as controversial by several journalists.",
            "Authorities arrested the reporter at his home after the leak.",
            "The CIA declined to comment on the authenticity of the files.",
            "The FBI said it was investigating the leak as a possible crime.",
            "Fact checkers flagged {number} viral tweets as false or misleading.",
            "Instagram removed accounts that spread fake news about the election.",
            "{person} accused the press of publishing fake stories.",
            "Media experts warned that the truth is often the first victim of terror.",
            "Press freedom groups said {number} journalists were jailed last year.",
            "The intelligence report said foreign agents used fake accounts.",
        ],
    },
}

ORDINALS = ["second", "third", "fourth", "fifth", "sixth"]


def fill(template, rng):
    s = template.format(day=rng.choice(DAYS), officials=rng.choice(OFFICIALS), number=rng.choice(NUMBERS),
                        person=rng.choice(PEOPLE), ordinal=rng.choice(ORDINALS), city=rng.choice(CITIES))
    return s[0].upper() + s[1:]


def article(topic, n, rng):
    spec = TOPICS[topic]
    title = spec["titles"][n % len(spec["titles"])]
    sentences = rng.sample(spec["sentences"], 9)
    paragraphs = []
    for i in range(0, len(sentences), 3):
        paragraphs.append(" ".join(fill(s, rng) for s in sentences[i:i + 3]))
    return title, "\n\n".join(paragraphs)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=2019)
    ap.add_argument("--per-topic", type=int, default=17)
    ap.add_argument("--out", default="data/toy/corpus.jsonl")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    records = []
    for topic in TOPICS:
        for n in range(args.per_topic):
            title, body = article(topic, n, rng)
            records.append({"id": f"{topic}-{n + 1:03d}", "title": title, "body": body, "source": "toy-wire"})
    rng.shuffle(records)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
