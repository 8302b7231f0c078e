//! Seeded synthetic corpora shared by the integration and acceptance tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sentilab::dataset::{Dialect, TweetRecord};
use sentilab::traineval::Label;

const FILLER: [&str; 12] = ["el", "la", "de", "que", "en", "un", "por", "con", "para", "hoy", "ya", "muy"];

/// 64 tweets, 16 per class. Each carries two class-specific words among
/// shared filler, so the classes are separable by token identity alone.
pub fn separable_corpus() -> Vec<TweetRecord> {
    let cues = [["genial", "feliz"], ["horrible", "triste"], ["quizas", "normal"], ["partido", "mañana"]];
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    (0..64)
        .map(|i| {
            let class = i % 4;
            let mut words: Vec<&str> = (0..4).map(|_| *FILLER.choose(&mut rng).unwrap()).collect();
            words.extend(cues[class]);
            words.shuffle(&mut rng);
            TweetRecord::new(format!("s{i}"), Dialect::ALL[i % 5], words.join(" "), Some(Label::ALL[class]))
        })
        .collect()
}

/// Binary task with a 9:1 class ratio. Each tweet carries one cue word that
/// agrees with its label with probability 0.65 and is otherwise the other
/// class's cue, plus filler.
pub fn skewed_corpus(n: usize, seed: u64) -> Vec<TweetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let minority = i % 10 == 0;
            let label = if minority { Label::N } else { Label::P };
            let honest = rng.gen_bool(0.65);
            let cue = if minority == honest { "malo" } else { "bueno" };
            let mut words: Vec<&str> = (0..3).map(|_| *FILLER.choose(&mut rng).unwrap()).collect();
            words.push(cue);
            words.shuffle(&mut rng);
            TweetRecord::new(format!("k{i}"), Dialect::Es, words.join(" "), Some(label))
        })
        .collect()
}

const NOUNS: [&str; 40] = [
    "Lunes", "Martes", "Futbol", "Cine", "Verano", "Lluvia", "Trabajo", "Examen", "Concierto", "Playa", "Tren", "Metro", "Cafe",
    "Pizza", "Gobierno", "Musica", "Perro", "Gato", "Escuela", "Oficina", "Fiesta", "Partido", "Viaje", "Libro", "Serie", "Noticia",
    "Mercado", "Parque", "Hospital", "Radio", "Clase", "Invierno", "Domingo", "Ciudad", "Barrio", "Cumple", "Boda", "Tarea", "Pelicula",
    "Torneo",
];

/// 160 tweets whose only label signal is the first word of a compound
/// hashtag such as `#FelizLunes`. The second word is drawn at random, so
/// most compounds in a held-out part never occur in the rest.
pub fn hashtag_corpus() -> Vec<TweetRecord> {
    let cues = ["Feliz", "Triste", "Quizas", "Dato"];
    let mut rng = ChaCha8Rng::seed_from_u64(160);
    (0..160)
        .map(|i| {
            let class = i % 4;
            let noun = NOUNS.choose(&mut rng).unwrap();
            let mut words: Vec<String> = (0..3).map(|_| FILLER.choose(&mut rng).unwrap().to_string()).collect();
            words.push(format!("#{}{noun}", cues[class]));
            words.shuffle(&mut rng);
            TweetRecord::new(format!("h{i}"), Dialect::ALL[i % 5], words.join(" "), Some(Label::ALL[class]))
        })
        .collect()
}

/// Same shape as [`hashtag_corpus`] but the cue is a plain word and there
/// are no hashtags at all.
pub fn hashtag_free_corpus() -> Vec<TweetRecord> {
    hashtag_corpus()
        .into_iter()
        .map(|mut r| {
            r.text = r.text.replace('#', "");
            r
        })
        .collect()
}

/// Per-class (precision, recall, f1) by direct counting over the pairs,
/// with 0 for empty denominators.
pub fn brute_force_prf(gold: &[usize], pred: &[usize], k: usize) -> Vec<(f64, f64, f64)> {
    (0..k)
        .map(|c| {
            let mut tp = 0.0;
            let mut fp = 0.0;
            let mut fn_ = 0.0;
            for (&g, &p) in gold.iter().zip(pred) {
                if p == c && g == c {
                    tp += 1.0;
                } else if p == c {
                    fp += 1.0;
                } else if g == c {
                    fn_ += 1.0;
                }
            }
            let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
            let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            (precision, recall, f1)
        })
        .collect()
}

/// Writes `records` as a dataset file and returns its path.
pub fn write_records(dir: &std::path::Path, name: &str, records: &[TweetRecord]) -> std::path::PathBuf {
    let path = dir.join(name);
    let data = sentilab::dataset::DatasetFile { records: records.to_vec() };
    sentilab::dataset::write_dataset(std::fs::File::create(&path).unwrap(), &data).unwrap();
    path
}
