#!/usr/bin/env python3
"""Regenerate the per-language data files shipped under src/granary/data/.

The generated files are checked in; this script exists so the language
lists can be rebuilt or extended in one place instead of hand-editing a
hundred small files. Rerunning it on an unchanged tree is diff-clean.

Produces:
  data/charset.txt            allowed characters across all 25 languages
  data/lexicons/<lang>.txt    high-frequency function words for lexicon LID
  data/histograms/<lang>.hist per-language frequent-character sets
  data/phrases/<lang>.txt     pseudo-label boilerplate blocklists
  data/pnc_exemplars/<lang>.tsv  punctuation restoration exemplar pairs
"""

from __future__ import annotations

import string
import sys
from collections import Counter
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from granary import mocks  # noqa: E402
from granary.languages import LANGUAGES  # noqa: E402
from granary.text_lid import LexiconLidClassifier  # noqa: E402

DATA_DIR = REPO_ROOT / "src" / "granary" / "data"

# Function words chosen to be frequent within their language while staying
# distinct across languages; the lexicon classifier scores a text by exact
# token hits, so near-identical neighbours (cs/sk, lt/lv, ru/uk, es/pt)
# deliberately keep their shared forms on one side only.
LEXICONS: dict[str, str] = {
    "bg": "на не се да във със той тя ние вие те къде защо кога това онова "
          "един една едно голям малък добре може трябва има няма само още вече",
    "cs": "jsem jsi jsme jste jsou není ale nebo když protože který která které "
          "tento tato toto všechno něco nic kde proč dnes zítra včera velmi také ještě už pak",
    "da": "jeg du han hun vi ikke det dette som og hvad hvor hvordan også meget "
          "lidt altid aldrig måske efter før være blive gøre sige komme dansk hvorfor nogle nogen",
    "de": "und der die das nicht ein eine einen mit für auf aus bei nach über "
          "unter zwischen wenn aber oder auch noch schon sehr kann muss wird haben sein ihre",
    "el": "και να το τα της του με για από στο στη δεν είναι αυτό αυτή εγώ εσύ "
          "εμείς πολύ λίγο πάντα ποτέ όταν γιατί πώς πού τώρα μετά πριν ελληνικά",
    "en": "the and of to in that it is was for on with as at by from this have "
          "not are were been their which would could should about after before",
    "es": "el los las uno unos unas ese esa esos esto pero porque cuando donde "
          "muy más menos siempre nunca también después antes ahora aquí está están tiene hace español señor",
    "et": "mina sina tema meie teie nemad see kes mis kus millal miks kuidas "
          "väga palju vähe alati mitte kunagi pärast enne nüüd siin seal olema eesti veel juba siis homme",
    "fi": "minä sinä hän tämä tuo joka mikä missä milloin miksi kuinka hyvin "
          "paljon vähän aina koskaan jälkeen ennen nyt täällä siellä olla suomi myös vielä mutta kun hänen meidän teidän",
    "fr": "le la les des une dans pour avec sur est et mais donc quand où "
          "comment pourquoi très peu toujours jamais après avant maintenant ici être avoir français aussi encore déjà",
    "hr": "mi oni ovo ono tko što gdje kad zašto kako jesam jesi nije ali vrlo "
          "uvijek nikad poslije prije sada ovdje biti hrvatski također još već danas sutra",
    "hu": "és nem igen egy ez az aki ami ahol amikor miért hogyan nagyon kevés "
          "mindig soha után előtt most itt ott lenni magyar szintén még már akkor mert hogy vagy",
    "it": "il lo gli un uno una che chi dove quando perché come molto poco "
          "sempre mai dopo prima adesso qui essere avere italiano anche ancora già oggi domani ieri questo",
    "lt": "aš tu jis ji mes jūs jie šis tas kas kur kada kodėl kaip labai daug "
          "mažai visada niekada prieš dabar čia ten būti lietuvių dar jau tada nes kiek",
    "lv": "es viņš viņa mēs viņi šī kurš kura kad kāpēc kā ļoti daudz maz "
          "vienmēr nekad pēc pirms tagad šeit tur būt latviešu arī vēl tad jums šodien rīt vakar",
    "mt": "jien int hu hi aħna intom huma dan din min fejn meta għaliex kif "
          "ħafna ftit dejjem qatt wara qabel issa hawn hemm ikun malti ukoll diġà illum għada kollox",
    "nl": "de het een niet maar want omdat wanneer waar hoe waarom zeer veel "
          "weinig altijd nooit na voor hier daar zijn hebben nederlands ook nog al vandaag morgen gisteren dit",
    "pl": "nie jest są kto gdzie kiedy dlaczego jak bardzo dużo mało zawsze "
          "nigdy po przed teraz tutaj tam być polski także jeszcze już wtedy ponieważ który która które bez dla",
    "pt": "o os um uns uma umas mas quem onde porquê muito pouco depois agora "
          "aqui ser ter português também ainda já hoje amanhã ontem este esta ele ela vocês nós",
    "ro": "și nu este care cine unde când cum foarte mult puțin întotdeauna "
          "niciodată după înainte acum aici acolo fi român încă deja astăzi mâine acest această pentru dacă toate fost",
    "ru": "что это было как мы они его так уже вот здесь теперь очень когда "
          "потом даже чтобы между через всегда никогда после перед сейчас быть русский тоже ещё сегодня завтра",
    "sk": "si sme ste sú keď pretože ktorý ktorá ktoré táto tieto všetko niečo "
          "nič prečo zajtra veľmi tiež ešte potom slovenský ako vždy nikdy hneď bude mám máš dobre musí",
    "sl": "sem nisem smo niso kaj kdo kje kdaj zakaj zelo veliko malo vedno "
          "nikoli potem prej zdaj tukaj tamkaj bomo slovenski tudi še že danes jutri včeraj tisti lahko samo",
    "sv": "jag inte och är ett en vad var när hur varför mycket lite alltid "
          "aldrig efteråt före här där vara bliva svenska också ännu redan idag imorgon igår detta dessa denna",
    "uk": "що це був була як ми вони його вже ось тут тепер дуже коли потім "
          "навіть щоб між завжди ніколи після зараз бути український також ще сьогодні вчора немає",
}

# Language-specific letters beyond ASCII (lowercase; uppercase forms are
# derived). Latin-script languages extend ASCII, el/bg/ru/uk replace it.
LATIN_EXTRAS: dict[str, str] = {
    "cs": "áčďéěíňóřšťúůýž",
    "da": "åæø",
    "de": "äöüß",
    "en": "",
    "es": "áéíñóúü",
    "et": "äõöüšž",
    "fi": "äåö",
    "fr": "àâæçéèêëîïôùûüœ",
    "hr": "čćđšž",
    "hu": "áéíóöőúüű",
    "it": "àèéìíîòóù",
    "lt": "ąčęėįšųūž",
    "lv": "āčēģīķļņšūž",
    "mt": "àċèġħìòùż",
    "nl": "éëèï",
    "pl": "ąćęłńóśźż",
    "pt": "àáâãçéêíóôõú",
    "ro": "ăâîșşțţ",
    "sk": "áäčďéíĺľňóôŕšťúýž",
    "sl": "čšž",
    "sv": "åäö",
}

GREEK_LOWER = "αβγδεζηθικλμνξοπρστυφχψω" + "ςάέήίόύώϊϋ"
CYRILLIC_LOWER = "абвгдежзийклмнопрстуфхцчшщъыьэюяё" + "іїєґ"

PUNCT = ".,;:!?¿¡'\"()«»„“”‘’-–%&+=/"

# Subtitle credits, sign-offs, and channel pleas that pseudo-labeling
# models emit on silence; matched case-insensitively as substrings.
PHRASES: dict[str, tuple[str, ...]] = {
    "bg": ("Благодаря за гледането", "Абонирайте се за канала", "Субтитри от общността"),
    "cs": ("Děkuji za zhlédnutí", "Odebírejte náš kanál", "Titulky vytvořila komunita"),
    "da": ("Tak fordi du så med", "Abonner på kanalen", "Undertekster af fællesskabet"),
    "de": ("Untertitel im Auftrag des ZDF", "Vielen Dank für Ihre Aufmerksamkeit",
           "Danke fürs Zuschauen", "Abonniert den Kanal"),
    "el": ("Ευχαριστώ που παρακολουθήσατε", "Κάντε εγγραφή στο κανάλι", "Υπότιτλοι από την κοινότητα"),
    "en": ("Thank you very much", "Thanks for watching", "Please subscribe to the channel",
           "Subtitles by the Amara community"),
    "es": ("Gracias por ver el video", "Suscríbete al canal", "Subtítulos realizados por la comunidad",
           "Muchas gracias por su atención"),
    "et": ("Tänan vaatamast", "Telli meie kanal", "Subtiitrid tegi kogukond"),
    "fi": ("Kiitos katsomisesta", "Tilaa kanava", "Tekstitykset teki yhteisö"),
    "fr": ("Sous-titrage Société Radio-Canada", "Merci d'avoir regardé cette vidéo",
           "Abonnez-vous à la chaîne", "Sous-titres réalisés par la communauté"),
    "hr": ("Hvala na gledanju", "Pretplatite se na kanal", "Titlove izradila zajednica"),
    "hu": ("Köszönöm a figyelmet", "Iratkozz fel a csatornára", "Feliratok a közösségtől"),
    "it": ("Grazie per la visione", "Iscrivetevi al canale", "Sottotitoli creati dalla comunità"),
    "lt": ("Ačiū kad žiūrėjote", "Prenumeruokite kanalą", "Subtitrus sukūrė bendruomenė"),
    "lv": ("Paldies ka skatījāties", "Abonējiet kanālu", "Subtitrus izveidoja kopiena"),
    "mt": ("Grazzi talli segwejtu", "Abbona fil-kanal", "Sottotitli mill-komunità"),
    "nl": ("Bedankt voor het kijken", "Abonneer je op het kanaal", "Ondertitels door de gemeenschap"),
    "pl": ("Dziękuję za obejrzenie", "Subskrybuj nasz kanał", "Napisy stworzyła społeczność"),
    "pt": ("Obrigado por assistirem", "Inscrevam-se no canal", "Legendas feitas pela comunidade"),
    "ro": ("Mulțumesc pentru vizionare", "Abonați-vă la canal", "Subtitrări realizate de comunitate"),
    "ru": ("Спасибо за просмотр", "Подписывайтесь на канал", "Субтитры сделал сообщество",
           "Редактор субтитров корректор"),
    "sk": ("Ďakujem za pozretie", "Odoberajte náš kanál", "Titulky vytvorila komunita"),
    "sl": ("Hvala za ogled", "Naročite se na kanal", "Podnapise ustvarila skupnost"),
    "sv": ("Tack för att ni tittade", "Prenumerera på kanalen", "Undertexter av gemenskapen"),
    "uk": ("Дякую за перегляд", "Підписуйтесь на канал", "Субтитри створила спільнота"),
}


def ordered_unique(chars: str) -> list[str]:
    seen = []
    for ch in chars:
        if ch not in seen:
            seen.append(ch)
    return seen


def with_upper(chars: str) -> list[str]:
    out = []
    for ch in ordered_unique(chars):
        out.append(ch)
        for up in ch.upper():
            # ß uppercases to SS; the ASCII letters are covered elsewhere.
            if up not in out and not up.isascii():
                out.append(up)
    return out


def script_chars(lang: str) -> list[str]:
    if lang == "el":
        return with_upper(GREEK_LOWER)
    if lang in ("bg", "ru", "uk"):
        return with_upper(CYRILLIC_LOWER)
    return with_upper(LATIN_EXTRAS[lang])


def build_charset() -> list[str]:
    chars = set(" " + string.ascii_letters + string.digits + PUNCT)
    for lang in LANGUAGES:
        chars.update(script_chars(lang))
    return sorted(chars)


def build_histogram(lang: str) -> list[str]:
    # ASCII letters stay in every histogram: real transcripts carry
    # names, brands, and URLs regardless of the language's own script.
    chars = set(string.ascii_letters + string.digits + PUNCT)
    chars.update(script_chars(lang))
    return sorted(chars)


def write_charfile(path: Path, chars: list[str]) -> None:
    lines = []
    for ch in chars:
        # Escape characters an editor could silently strip or mangle.
        if ch.isspace():
            lines.append("\\u%04x" % ord(ch))
        else:
            lines.append(ch)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_lexicons(out_dir: Path) -> dict[str, list[str]]:
    out_dir.mkdir(parents=True, exist_ok=True)
    words_by_lang = {}
    for lang in LANGUAGES:
        words = LEXICONS[lang].split()
        assert len(words) == len(set(words)), f"duplicate word in {lang} lexicon"
        (out_dir / f"{lang}.txt").write_text("\n".join(words) + "\n", encoding="utf-8")
        words_by_lang[lang] = words
    return words_by_lang


def write_phrases(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for lang in LANGUAGES:
        body = "# pseudo-label boilerplate; matched case-insensitively\n"
        body += "\n".join(PHRASES[lang]) + "\n"
        (out_dir / f"{lang}.txt").write_text(body, encoding="utf-8")


def write_exemplars(out_dir: Path, words_by_lang: dict[str, list[str]]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for lang in LANGUAGES:
        words = words_by_lang[lang]
        first, second = words[:6], words[6:12]
        before_1 = " ".join(first)
        after_1 = " ".join(first[:3]).capitalize() + ", " + " ".join(first[3:]) + "."
        before_2 = " ".join(second)
        after_2 = " ".join(second).capitalize() + "?"
        lines = [f"{before_1}\t{after_1}", f"{before_2}\t{after_2}"]
        (out_dir / f"{lang}.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def verify(charset: set[str], words_by_lang: dict[str, list[str]]) -> None:
    problems = []
    for lang, words in words_by_lang.items():
        for word in words:
            missing = set(word) - charset
            if missing:
                problems.append(f"{lang} lexicon word {word!r} outside charset: {missing}")
    for lang, phrases in PHRASES.items():
        for phrase in phrases:
            missing = set(phrase) - charset
            if missing:
                problems.append(f"{lang} phrase {phrase!r} outside charset: {missing}")
    for name, needed in (("en", mocks._EN_WORDS), ("fr", mocks._FR_WORDS), ("ru", mocks._RU_WORDS)):
        gap = set(needed) - set(words_by_lang[name])
        if gap:
            problems.append(f"{name} lexicon missing mock vocabulary: {sorted(gap)}")

    counts = Counter(w for words in words_by_lang.values() for w in words)
    shared = {w: n for w, n in counts.items() if n > 1}
    if any(n > 2 for n in shared.values()):
        problems.append(f"word shared by more than two lexicons: {shared}")

    classifier = LexiconLidClassifier.from_dir(DATA_DIR / "lexicons")
    for lang, words in words_by_lang.items():
        pred, prob = classifier.classify(" ".join(words))
        if pred != lang or prob < 0.6:
            problems.append(f"{lang} self-classification weak: predicted {pred} at {prob:.2f}")

    if problems:
        for p in problems:
            print("PROBLEM:", p, file=sys.stderr)
        raise SystemExit(1)
    if shared:
        print(f"note: {len(shared)} words shared by two lexicons: {sorted(shared)}")


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    charset = build_charset()
    write_charfile(DATA_DIR / "charset.txt", charset)
    for lang in LANGUAGES:
        hist_dir = DATA_DIR / "histograms"
        hist_dir.mkdir(parents=True, exist_ok=True)
        write_charfile(hist_dir / f"{lang}.hist", build_histogram(lang))
    words_by_lang = write_lexicons(DATA_DIR / "lexicons")
    write_phrases(DATA_DIR / "phrases")
    write_exemplars(DATA_DIR / "pnc_exemplars", words_by_lang)
    verify(set(charset), words_by_lang)
    print(f"charset: {len(charset)} characters")
    print(f"languages: {len(LANGUAGES)} (lexicons, histograms, phrases, exemplars)")


if __name__ == "__main__":
    main()
