package org.redisson.jcache;

import java.util.HashMap;
import java.util.Map;

/**
 * Cache backed by a local map.
 */
public class JCache<K, V> implements Cache<K, V> {

    private final Map<K, V> entries = new HashMap<>();
    private volatile boolean closed;

    @Override
    public V get(K key) {
        checkNotClosed();
        return entries.get(key);
    }

    @Override
    public void put(K key, V value) {
        checkNotClosed();
        entries.put(key, value);
    }

    @Override
    public boolean isClosed() {
        return closed;
    }

    @Override
    public void close() {
        if (closed) {
            return;
        }
        entries.clear();
        closed = true;
    }

    private void checkNotClosed() {
        if (closed) {
            throw new IllegalStateException("Cache is closed");
        }
    }
}
