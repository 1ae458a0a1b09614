package org.redisson.jcache;

public interface Cache<K, V> extends AutoCloseable {

    V get(K key);

    void put(K key, V value);

    boolean isClosed();

    @Override
    void close();
}
