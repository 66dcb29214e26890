/// Binary max-heap over `0..n` keyed by `f64`, supporting key decreases.
pub(crate) struct IndexedMaxHeap {
    keys: Vec<f64>,
    heap: Vec<u32>,
    pos: Vec<u32>,
}

impl IndexedMaxHeap {
    pub(crate) fn new(keys: Vec<f64>) -> Self {
        let n = keys.len();
        let heap: Vec<u32> = (0..n as u32).collect();
        let pos = heap.clone();
        let mut h = Self { keys, heap, pos };
        for i in (0..n / 2).rev() {
            h.sift_down(i);
        }
        h
    }

    pub(crate) fn key(&self, id: usize) -> f64 {
        self.keys[id]
    }

    /// Current maximum; ties go to the smaller id.
    pub(crate) fn peek(&self) -> Option<(usize, f64)> {
        self.heap.first().map(|&i| (i as usize, self.keys[i as usize]))
    }

    pub(crate) fn decrease(&mut self, id: usize, key: f64) {
        debug_assert!(key <= self.keys[id]);
        self.keys[id] = key;
        self.sift_down(self.pos[id] as usize);
    }

    #[inline]
    fn above(&self, a: u32, b: u32) -> bool {
        let (ka, kb) = (self.keys[a as usize], self.keys[b as usize]);
        ka > kb || (ka == kb && a < b)
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let mut best = l;
            if r < n && self.above(self.heap[r], self.heap[l]) {
                best = r;
            }
            if self.above(self.heap[best], self.heap[i]) {
                self.heap.swap(i, best);
                self.pos[self.heap[i] as usize] = i as u32;
                self.pos[self.heap[best] as usize] = best as u32;
                i = best;
            } else {
                break;
            }
        }
    }
}
