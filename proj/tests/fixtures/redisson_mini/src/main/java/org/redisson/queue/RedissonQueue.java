package org.redisson.queue;

import java.util.ArrayDeque;
import java.util.Deque;
import java.util.NoSuchElementException;

public class RedissonQueue<V> {

    private final Deque<V> elements = new ArrayDeque<>();
    private int capacity;
    private V lastRemoved;

    public RedissonQueue(int capacity) {
        this.capacity = capacity;
    }

    public void initializeQueue(int capacity) {
        this.capacity = capacity;
        elements.clear();
    }

    public boolean offer(V value) {
        if (elements.size() >= capacity) {
            return false;
        }
        return elements.offerLast(value);
    }

    public V removeFirst() {
        validateQueueState();
        lastRemoved = elements.pollFirst();
        return lastRemoved;
    }

    public V poll() {
        lastRemoved = elements.pollFirst();
        return lastRemoved;
    }

    public V remove() {
        return removeFirst();
    }

    public V getFirst() {
        V value = elements.peekFirst();
        if (value == null) {
            throw new NoSuchElementException();
        }
        return value;
    }

    public void validateQueueState() {
        if (elements.isEmpty()) {
            throw new NoSuchElementException("queue is empty");
        }
    }

    public boolean verifyRemoval(V value) {
        return value != null && value.equals(lastRemoved) && !elements.contains(value);
    }

    public int size() {
        return elements.size();
    }
}
