package org.redisson.queue;

import static org.junit.jupiter.api.Assertions.assertEquals;
import static org.junit.jupiter.api.Assertions.assertNull;
import static org.junit.jupiter.api.Assertions.assertThrows;
import static org.junit.jupiter.api.Assertions.assertTrue;

import java.util.NoSuchElementException;

import org.junit.jupiter.api.Test;

public class RedissonQueueTest {

    @Test
    public void testPoll() {
        RedissonQueue<Integer> queue = new RedissonQueue<>(4);
        queue.offer(1);
        queue.offer(2);
        assertEquals(1, queue.poll());
        assertEquals(1, queue.size());
        assertTrue(queue.verifyRemoval(1));
    }

    @Test
    public void testPollEmpty() {
        RedissonQueue<Integer> queue = new RedissonQueue<>(4);
        assertNull(queue.poll());
    }

    @Test
    public void testRemove() {
        RedissonQueue<Integer> queue = new RedissonQueue<>(4);
        queue.offer(7);
        assertEquals(7, queue.remove());
    }

    @Test
    public void testGetFirst() {
        RedissonQueue<Integer> queue = new RedissonQueue<>(4);
        queue.offer(3);
        assertEquals(3, queue.getFirst());
        assertEquals(1, queue.size());
    }

    @Test
    public void testInitializeQueue() {
        RedissonQueue<Integer> queue = new RedissonQueue<>(1);
        queue.offer(1);
        queue.initializeQueue(2);
        assertEquals(0, queue.size());
    }

    @Test
    public void testValidateQueueState() {
        RedissonQueue<Integer> queue = new RedissonQueue<>(1);
        assertThrows(NoSuchElementException.class, queue::validateQueueState);
    }
}
