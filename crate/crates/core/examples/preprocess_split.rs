//! Normalize raw tickets, then draw a class-balanced train/valid/test split.
//!
//! cargo run --example preprocess_split

use udatext::corpus::{load_dataset, normalize_text, stratified_split, tokenize, SplitSpec};

const TOPICS: [(&str, &[&str]); 3] = [
    ("billing", &["fatura", "cobranca", "valor", "pagamento", "boleto"]),
    ("delivery", &["entrega", "atraso", "pedido", "transportadora", "prazo"]),
    ("account", &["senha", "login", "cadastro", "acesso", "conta"]),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = "Minha FATURA de 12/2023 veio errada!! Veja https://exemplo.com.br/f?id=99 ou fale com suporte@exemplo.com";
    println!("raw:        {raw}");
    println!("normalized: {}", normalize_text(raw));
    println!("tokens:     {:?}", tokenize(&normalize_text(raw)));

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("tickets.jsonl");
    let mut lines = String::new();
    for (label, words) in TOPICS {
        for i in 0..20 {
            let text = format!(
                "Pedido {i}: problema com {} e {} desde {}/01",
                words[i % words.len()],
                words[(i * 3 + 1) % words.len()],
                i + 1
            );
            lines.push_str(&serde_json::json!({"id": format!("{label}-{i}"), "text": text, "label": label}).to_string());
            lines.push('\n');
        }
    }
    std::fs::write(&path, lines)?;

    let data = load_dataset(&path, true)?;
    println!("\nloaded {} documents, classes {:?}", data.len(), data.classes);
    println!("first: {:?}", data.docs[0].tokens);

    let spec = SplitSpec {
        train: 12,
        valid: 4,
        test: 4,
        seed: 7,
    };
    let (train, valid, test) = stratified_split(&data, &spec)?;
    for (name, part) in [("train", &train), ("valid", &valid), ("test", &test)] {
        println!("{name:<5} {:>3} docs, per class {:?}", part.len(), part.class_counts());
    }
    Ok(())
}
