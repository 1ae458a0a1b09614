package org.redisson.jcache;

import static org.junit.jupiter.api.Assertions.assertEquals;
import static org.junit.jupiter.api.Assertions.assertTrue;

import java.util.ArrayList;
import java.util.List;
import java.util.concurrent.CountDownLatch;

import org.junit.jupiter.api.BeforeEach;
import org.junit.jupiter.api.Test;
import org.redisson.TestUtil;

public class JCacheTest {

    private Cache<String, String> cache;
    private final List<String> expired = new ArrayList<>();
    private CountDownLatch latch;

    public static class ExpiredListener {
        private final List<String> sink;

        public ExpiredListener(List<String> sink) {
            this.sink = sink;
        }

        public void onExpired(String key) {
            sink.add(key);
        }
    }

    @BeforeEach
    public void beforeEach() {
        cache = new JCache<>();
        cache.put("1", "2");
    }

    @Test
    public void testClose() {
        cache.close();
        assertTrue(cache.isClosed());
        TestUtil.logTestResult("testClose", 0);
    }

    @Test
    public void testExpiredListener() throws InterruptedException {
        latch = new CountDownLatch(1);
        ExpiredListener listener = new ExpiredListener(expired);
        listener.onExpired("1");
        latch.countDown();
        latch.await();
        assertEquals(1, expired.size());
    }
}
