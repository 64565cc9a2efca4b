use std::sync::mpsc::{channel, Receiver, Sender};

use super::events::{LinkEvent, Topic};

/// In-process publish/subscribe.
///
/// Delivery is at most once per subscriber and ordered as published. A
/// subscriber whose receiver has been dropped is forgotten on the next
/// publish.
#[derive(Debug, Default)]
pub struct Bus {
    subscribers: Vec<(Option<Vec<Topic>>, Sender<LinkEvent>)>,
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn subscribe(&mut self) -> Receiver<LinkEvent> {
        let (tx, rx) = channel();
        self.subscribers.push((None, tx));
        rx
    }

    /// Subscribes and queues `prelude` ahead of anything published later.
    pub fn subscribe_with(&mut self, prelude: &[LinkEvent]) -> Receiver<LinkEvent> {
        let (tx, rx) = channel();
        for e in prelude {
            let _ = tx.send(e.clone());
        }
        self.subscribers.push((None, tx));
        rx
    }

    pub fn subscribe_topics(&mut self, topics: &[Topic]) -> Receiver<LinkEvent> {
        let (tx, rx) = channel();
        self.subscribers.push((Some(topics.to_vec()), tx));
        rx
    }

    pub fn publish(&mut self, e: &LinkEvent) {
        let topic = e.topic();
        self.subscribers.retain(|(filter, tx)| {
            if filter.as_ref().is_some_and(|f| !f.contains(&topic)) {
                return true;
            }
            tx.send(e.clone()).is_ok()
        });
    }

    pub fn subscriber_count(&self) -> usize {
        self.subscribers.len()
    }
}
